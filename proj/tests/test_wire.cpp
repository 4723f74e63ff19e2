#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "evlat/wire.hpp"

using namespace evlat;

TEST_CASE("empty event datagram is the bare header") {
    EventPacket empty;
    empty.seq = 7;
    const std::vector<std::uint8_t> bytes = frame_events(7, empty);
    const std::vector<std::uint8_t> expected = {0x07, 0, 0, 0, 0, 0, 0, 0};
    CHECK(bytes == expected);
}

TEST_CASE("event datagram length is header plus 8 bytes per event") {
    EventPacket p;
    p.seq = 3;
    for (int i = 0; i < 17; ++i) {
        p.events.push_back({static_cast<std::uint16_t>(i), 4, static_cast<std::uint32_t>(i), Polarity::On});
    }
    CHECK(frame_events(3, p).size() == 8 + 8 * 17);
}

TEST_CASE("event datagram frame/parse are inverses") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> xs(0, kSensorWidth - 1);
    std::uniform_int_distribution<int> ys(0, kSensorHeight - 1);
    std::uniform_int_distribution<int> counts(0, 750);
    for (int trial = 0; trial < 200; ++trial) {
        EventPacket p;
        p.seq = static_cast<std::uint32_t>(rng());
        const int n = counts(rng);
        std::uint32_t ts = 0;
        for (int i = 0; i < n; ++i) {
            ts += static_cast<std::uint32_t>(rng() % 50);
            p.events.push_back({static_cast<std::uint16_t>(xs(rng)),
                                static_cast<std::uint16_t>(ys(rng)), ts,
                                (rng() & 1) ? Polarity::On : Polarity::Off});
        }
        const auto bytes = frame_events(p.seq, p);
        const auto [seq, back] = parse_events(bytes);
        REQUIRE(seq == p.seq);
        REQUIRE(back == p);
    }
}

TEST_CASE("malformed event datagrams are rejected") {
    SECTION("nine bytes violates the length formula") {
        std::vector<std::uint8_t> bytes(9, 0);
        CHECK_THROWS_AS(parse_events(bytes), MalformedDatagramError);
    }
    SECTION("shorter than the header") {
        std::vector<std::uint8_t> bytes(5, 0);
        CHECK_THROWS_AS(parse_events(bytes), MalformedDatagramError);
    }
    SECTION("count beyond one packet's maximum") {
        std::vector<std::uint8_t> bytes(8, 0);
        bytes[4] = 0xEF;
        bytes[5] = 0x02;  // count = 751
        CHECK_THROWS_AS(parse_events(bytes), MalformedDatagramError);
    }
    SECTION("payload length disagreeing with count") {
        EventPacket p;
        p.events.push_back({1, 1, 1, Polarity::On});
        auto bytes = frame_events(0, p);
        bytes.push_back(0);
        CHECK_THROWS_AS(parse_events(bytes), MalformedDatagramError);
    }
    SECTION("embedded event out of sensor bounds") {
        std::vector<std::uint8_t> bytes(16, 0);
        bytes[4] = 1;               // count = 1
        put_u32_le(bytes.data() + 8, 250u);  // x = 250
        CHECK_THROWS_AS(parse_events(bytes), MalformedEventError);
    }
    SECTION("oversize packet refuses to frame") {
        EventPacket p;
        p.events.assign(751, Event{1, 1, 1, Polarity::On});
        CHECK_THROWS_AS(frame_events(0, p), MalformedDatagramError);
    }
}

TEST_CASE("roi datagram layout") {
    SECTION("all-zero message is 20 zero bytes") {
        const auto bytes = frame_roi(0, 0, 0.0f, 0.0f);
        REQUIRE(bytes.size() == kRoiDatagramBytes);
        for (std::uint8_t b : bytes) CHECK(b == 0);
    }
    SECTION("round-trip of random valid values") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<float> cxs(0.0f, 240.0f);
        std::uniform_real_distribution<float> cys(0.0f, 180.0f);
        for (int i = 0; i < 2000; ++i) {
            RoiMessage msg;
            msg.seq = static_cast<std::uint32_t>(rng());
            msg.ts = rng();
            msg.cx = cxs(rng);
            msg.cy = cys(rng);
            const RoiMessage back = parse_roi(frame_roi(msg.seq, msg.ts, msg.cx, msg.cy));
            REQUIRE(back == msg);
        }
    }
    SECTION("wrong length is a framing error") {
        std::vector<std::uint8_t> bytes(19, 0);
        CHECK_THROWS_AS(parse_roi(bytes), MalformedDatagramError);
        bytes.assign(21, 0);
        CHECK_THROWS_AS(parse_roi(bytes), MalformedDatagramError);
    }
    SECTION("out-of-range center is a semantic error, not a framing error") {
        const auto bytes = frame_roi(1, 2, 120.0f, 90.0f);
        auto bad = bytes;
        const float cx = 300.0f;
        std::uint32_t bits;
        std::memcpy(&bits, &cx, 4);
        put_u32_le(bad.data() + 12, bits);
        CHECK_THROWS_AS(parse_roi(bad), DatagramRangeError);
        CHECK_THROWS_AS(frame_roi(1, 2, 300.0f, 0.0f), DatagramRangeError);
    }
    SECTION("NaN coordinates are out of range") {
        const float nan = std::numeric_limits<float>::quiet_NaN();
        CHECK_THROWS_AS(frame_roi(0, 0, nan, 0.0f), DatagramRangeError);
        auto bad = frame_roi(1, 2, 120.0f, 90.0f);
        std::uint32_t bits;
        std::memcpy(&bits, &nan, 4);
        put_u32_le(bad.data() + 16, bits);
        CHECK_THROWS_AS(parse_roi(bad), DatagramRangeError);
    }
}
