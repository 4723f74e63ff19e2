#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "evlat/scene.hpp"

using namespace evlat;

TEST_CASE("stepper angle follows the quantized sinusoid") {
    const StepperProfile p;  // 36 deg, 0.5 Hz, 0.225 deg steps
    CHECK(stepper_angle(0.0, p) == 0.0);
    CHECK(stepper_angle(0.5, p) == Catch::Approx(36.0));
    // 36*sin(0.1*2*pi*0.5) = 11.12461..., nearest 0.225 multiple is 11.025
    CHECK(stepper_angle(0.1, p) == Catch::Approx(11.025));
}

TEST_CASE("stepper angle is bounded and lands on step multiples") {
    const StepperProfile p;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ts(0.0, 20.0);
    for (int i = 0; i < 5000; ++i) {
        const double angle = stepper_angle(ts(rng), p);
        REQUIRE(std::abs(angle) <= p.amplitude_deg + 1e-12);
        const double steps = angle / p.step_deg;
        REQUIRE(std::abs(steps - std::round(steps)) < 1e-9);
    }
}

TEST_CASE("stepper profile validation") {
    StepperProfile p;
    p.amplitude_deg = 36.1;  // not a multiple of 0.225
    CHECK_THROWS_AS(validate(p), SceneConfigError);
    p = StepperProfile{};
    p.frequency_hz = 0.0;
    CHECK_THROWS_AS(validate(p), SceneConfigError);
    p = StepperProfile{};
    CHECK_NOTHROW(validate(p));
}

TEST_CASE("hand pose geometry") {
    const StepperProfile p;
    const HandModel h;
    SECTION("nominal pose sits straight above the pivot") {
        const HandPose pose = hand_pose(0.0, p, h);
        CHECK(pose.center.x == Catch::Approx(h.pivot_x));
        CHECK(pose.center.y == Catch::Approx(h.pivot_y - h.arm_px));
    }
    SECTION("peak angle matches the closed form") {
        // t = 0.5 s puts the stepper at exactly +36 degrees.
        const HandPose pose = hand_pose(0.5, p, h);
        CHECK(pose.center.x == Catch::Approx(120.0 + 60.0 * std::sin(36.0 * std::numbers::pi / 180.0)).epsilon(1e-9));
        CHECK(pose.center.y == Catch::Approx(160.0 - 60.0 * std::cos(36.0 * std::numbers::pi / 180.0)).epsilon(1e-9));
        CHECK(pose.center.x == Catch::Approx(155.2671).margin(1e-3));
        CHECK(pose.center.y == Catch::Approx(111.4590).margin(1e-3));
    }
    SECTION("opposite angles mirror about the vertical axis") {
        const HandPose plus = hand_pose_at_angle(20.25, h);
        const HandPose minus = hand_pose_at_angle(-20.25, h);
        CHECK(plus.center.x - h.pivot_x == Catch::Approx(h.pivot_x - minus.center.x));
        CHECK(plus.center.y == Catch::Approx(minus.center.y));
    }
}

TEST_CASE("hand geometry that can leave the frame is rejected") {
    const StepperProfile p;
    HandModel h;
    h.arm_px = 145.0;  // outer corners reach past the top of the frame
    CHECK_THROWS_AS(validate(h, p), SceneConfigError);
    h = HandModel{};
    h.pivot_x = 30.0;  // swings out of the left border at -36 degrees
    CHECK_THROWS_AS(validate(h, p), SceneConfigError);
    h = HandModel{};
    CHECK_NOTHROW(validate(h, p));
}

TEST_CASE("a dwelling stepper generates no events") {
    // Tiny frequency: over [0, 0.1 s] the quantized angle never leaves 0.
    StepperProfile p;
    p.frequency_hz = 1e-4;
    const HandModel h;
    const auto packets = generate_events(0.0, 0.1, p, h, 42);
    std::size_t events = 0;
    for (const auto& pk : packets) events += pk.events.size();
    CHECK(events == 0);
}

TEST_CASE("generated events stay in bounds with ordered timestamps") {
    const StepperProfile p;
    const HandModel h;
    const auto packets = generate_events(0.0, 0.5, p, h, 9);
    REQUIRE(!packets.empty());
    std::uint32_t prev_ts = 0;
    std::uint32_t prev_seq = 0;
    bool first_packet = true;
    for (const auto& pk : packets) {
        if (!first_packet) REQUIRE(pk.seq == prev_seq + 1);
        prev_seq = pk.seq;
        first_packet = false;
        for (const Event& e : pk.events) {
            REQUIRE(e.x < kSensorWidth);
            REQUIRE(e.y < kSensorHeight);
            REQUIRE(e.ts >= prev_ts);
            prev_ts = e.ts;
        }
    }
}

TEST_CASE("event generation is reproducible for a fixed seed") {
    const StepperProfile p;
    const HandModel h;
    const auto a = generate_events(0.0, 0.4, p, h, 1234);
    const auto b = generate_events(0.0, 0.4, p, h, 1234);
    REQUIRE(a.size() == b.size());
    CHECK(a == b);
    const auto c = generate_events(0.0, 0.4, p, h, 1235);
    CHECK(a != c);
}

TEST_CASE("ON and OFF events balance over a full period") {
    const StepperProfile p;
    const HandModel h;
    const auto packets = generate_events(0.0, 2.0, p, h, 5);
    double on = 0, off = 0;
    for (const auto& pk : packets) {
        for (const Event& e : pk.events) (e.pol == Polarity::On ? on : off) += 1.0;
    }
    REQUIRE(on + off > 0);
    CHECK(std::abs(on - off) / (on + off) < 0.10);
}

TEST_CASE("packet cadence matches the observed reference rates") {
    SECTION("0.5 Hz sweep averages ~6 ms per 750-event packet") {
        const StepperProfile p;
        const HandModel h;
        std::size_t events = 0;
        for (const auto& pk : generate_events(0.0, 2.0, p, h, 77)) events += pk.events.size();
        const double interval_ms = 750.0 / (static_cast<double>(events) / 2.0) * 1000.0;
        CHECK(interval_ms > 6.0 * 0.8);
        CHECK(interval_ms < 6.0 * 1.2);
    }
    SECTION("1 Hz sweep averages within 20% of 3.5 ms per packet") {
        StepperProfile p;
        p.frequency_hz = 1.0;
        const HandModel h;
        std::size_t events = 0;
        for (const auto& pk : generate_events(0.0, 1.0, p, h, 77)) events += pk.events.size();
        const double interval_ms = 750.0 / static_cast<double>(events) * 1000.0;
        CHECK(interval_ms > 3.5 * 0.8);
        CHECK(interval_ms < 3.5 * 1.2);
    }
}

TEST_CASE("packets carry exactly 750 events apart from the tail") {
    const StepperProfile p;
    const HandModel h;
    const auto packets = generate_events(0.0, 1.0, p, h, 21);
    REQUIRE(packets.size() > 2);
    for (std::size_t i = 0; i + 1 < packets.size(); ++i) {
        REQUIRE(packets[i].events.size() == 750);
    }
    CHECK(packets.back().events.size() <= 750);
    CHECK(!packets.back().events.empty());
}

TEST_CASE("master gyro trace") {
    SECTION("unquantized derivative at t=0 is amplitude * 2 pi f") {
        StepperProfile p;
        p.step_deg = 36.0 / (1 << 25);  // effectively continuous
        const GyroTrace trace = sample_gyro_master(0, 1000000, p);
        CHECK(trace.samples[0] == Catch::Approx(113.0973).margin(0.05));
    }
    SECTION("derivative at the sinusoid peak is ~0") {
        const StepperProfile p;
        const GyroTrace trace = sample_gyro_master(0, 1000000, p);
        // t = 0.5 s is sample 100 at 200 Hz
        CHECK(std::abs(trace.samples[100]) < 1.0);
    }
    SECTION("two seconds yields exactly 400 samples") {
        const StepperProfile p;
        const GyroTrace trace = sample_gyro_master(0, 2000000, p);
        CHECK(trace.samples.size() == 400);
        CHECK(trace.period_us == 5000);
    }
    SECTION("too short an interval is rejected") {
        const StepperProfile p;
        CHECK_THROWS_AS(sample_gyro_master(0, 4000, p), SceneConfigError);
    }
}

TEST_CASE("gyro noise is seeded and optional") {
    const StepperProfile p;
    GyroTrace a = sample_gyro_master(0, 1000000, p);
    GyroTrace b = a;
    add_gyro_noise(a, 0.0, 1);
    CHECK(a.samples == b.samples);
    add_gyro_noise(a, 0.5, 1);
    add_gyro_noise(b, 0.5, 1);
    CHECK(a.samples == b.samples);
}
