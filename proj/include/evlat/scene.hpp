#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "evlat/event.hpp"
#include "evlat/gyro.hpp"

namespace evlat {

class SceneConfigError : public std::runtime_error {
  public:
    explicit SceneConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Sinusoidal stepper drive. The motor moves in discrete microsteps, so
/// the commanded angle is the sinusoid quantized to step_deg multiples;
/// the quantization is what puts the staircase into the velocity signal.
struct StepperProfile {
    double amplitude_deg = 36.0;
    double frequency_hz = 0.5;
    double step_deg = 0.225;  // 1.8 deg/step NEMA 17 at 1/8 microstepping
    double phase_rad = 0.0;
};

inline void validate(const StepperProfile& p) {
    if (p.amplitude_deg <= 0.0) throw SceneConfigError("stepper amplitude must be > 0");
    if (p.frequency_hz <= 0.0) throw SceneConfigError("stepper frequency must be > 0");
    if (p.step_deg <= 0.0) throw SceneConfigError("stepper step size must be > 0");
    const double ratio = p.amplitude_deg / p.step_deg;
    if (std::abs(ratio - std::round(ratio)) > 1e-6) {
        throw SceneConfigError("stepper amplitude must be an integer multiple of the step size");
    }
}

inline double quantize_to_step(double value, double step) {
    return step * std::round(value / step);
}

/// Commanded hand angle in degrees at time t (seconds), measured from
/// the vertical axis through the pivot, positive toward image right.
inline double stepper_angle(double t_s, const StepperProfile& p) {
    const double raw =
        p.amplitude_deg * std::sin(2.0 * std::numbers::pi * p.frequency_hz * t_s + p.phase_rad);
    return quantize_to_step(raw, p.step_deg);
}

/// Synthetic stand-in for the waving hand: a rigid rectangle swinging on
/// an arm about a pivot, defined directly in image coordinates (y down).
struct HandModel {
    double pivot_x = 120.0;
    double pivot_y = 160.0;
    double arm_px = 60.0;
    double width_px = 30.0;
    double height_px = 40.0;
    // Expected events per pixel of edge length per pixel of normal
    // displacement. Calibrated once so the default 0.5 Hz sweep emits
    // ~125k events/s (one 750-event packet every ~6 ms); frozen here.
    double rate_coeff = 18.95;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Rectangle pose: center plus unit axes. `along` points from the pivot
/// outward through the rectangle (local +y), `lateral` is the width
/// direction (local +x).
struct HandPose {
    Vec2 center;
    Vec2 along;
    Vec2 lateral;
    double angle_deg = 0.0;
};

inline Vec2 hand_point(const HandModel& h, double angle_deg, double lx, double ly) {
    const double th = angle_deg * std::numbers::pi / 180.0;
    const Vec2 u{std::sin(th), -std::cos(th)};  // along-arm, image y grows downward
    const Vec2 v{std::cos(th), std::sin(th)};   // lateral
    return {h.pivot_x + (h.arm_px + ly) * u.x + lx * v.x,
            h.pivot_y + (h.arm_px + ly) * u.y + lx * v.y};
}

inline HandPose hand_pose_at_angle(double angle_deg, const HandModel& h) {
    const double th = angle_deg * std::numbers::pi / 180.0;
    HandPose pose;
    pose.along = {std::sin(th), -std::cos(th)};
    pose.lateral = {std::cos(th), std::sin(th)};
    pose.center = {h.pivot_x + h.arm_px * pose.along.x, h.pivot_y + h.arm_px * pose.along.y};
    pose.angle_deg = angle_deg;
    return pose;
}

inline HandPose hand_pose(double t_s, const StepperProfile& p, const HandModel& h) {
    return hand_pose_at_angle(stepper_angle(t_s, p), h);
}

inline std::vector<Vec2> hand_corners(const HandModel& h, double angle_deg) {
    const double hw = h.width_px / 2.0;
    const double hh = h.height_px / 2.0;
    return {hand_point(h, angle_deg, -hw, -hh), hand_point(h, angle_deg, hw, -hh),
            hand_point(h, angle_deg, hw, hh), hand_point(h, angle_deg, -hw, hh)};
}

/// Rejects geometry that would let the rectangle leave the frame
/// anywhere over the swept angle range (one whole-pixel margin so that
/// rounding event positions can never escape the sensor).
inline void validate(const HandModel& h, const StepperProfile& p) {
    if (h.arm_px <= 0.0 || h.width_px <= 0.0 || h.height_px <= 0.0 || h.rate_coeff <= 0.0) {
        throw SceneConfigError("hand dimensions and rate coefficient must be > 0");
    }
    if (h.pivot_x < 0.0 || h.pivot_x > kSensorWidth - 1 || h.pivot_y < 0.0 ||
        h.pivot_y > kSensorHeight - 1) {
        throw SceneConfigError("hand pivot must lie inside the sensor frame");
    }
    const int steps = static_cast<int>(std::round(p.amplitude_deg / p.step_deg));
    for (int k = -steps; k <= steps; ++k) {
        const double angle = k * p.step_deg;
        for (const Vec2& c : hand_corners(h, angle)) {
            if (c.x < 1.0 || c.x > kSensorWidth - 2 || c.y < 1.0 || c.y > kSensorHeight - 2) {
                throw SceneConfigError("hand rectangle leaves the frame at angle " +
                                       std::to_string(angle) + " deg");
            }
        }
    }
}

namespace detail {

struct EdgeSample {
    double lx = 0.0;       // local coordinates on the rectangle boundary
    double ly = 0.0;
    double nx_local = 0.0;  // outward normal in the local frame
    double ny_local = 0.0;
    double span = 1.0;      // edge length this sample represents, px
    bool jitter_lateral = false;  // jitter runs along the edge direction
};

inline std::vector<EdgeSample> edge_samples(const HandModel& h) {
    std::vector<EdgeSample> samples;
    const double hw = h.width_px / 2.0;
    const double hh = h.height_px / 2.0;
    const int nw = std::max(1, static_cast<int>(std::round(h.width_px)));
    const int nh = std::max(1, static_cast<int>(std::round(h.height_px)));
    for (int i = 0; i < nw; ++i) {
        const double lx = -hw + (i + 0.5) * h.width_px / nw;
        samples.push_back({lx, hh, 0.0, 1.0, h.width_px / nw, true});    // outer edge
        samples.push_back({lx, -hh, 0.0, -1.0, h.width_px / nw, true});  // inner edge
    }
    for (int j = 0; j < nh; ++j) {
        const double ly = -hh + (j + 0.5) * h.height_px / nh;
        samples.push_back({hw, ly, 1.0, 0.0, h.height_px / nh, false});    // right edge
        samples.push_back({-hw, ly, -1.0, 0.0, h.height_px / nh, false});  // left edge
    }
    return samples;
}

}  // namespace detail

/// Poisson event synthesis along the rectangle's moving edges. For each
/// edge sample the expected count over a time bin is
/// rate_coeff * |displacement normal to the edge| * represented length;
/// the leading edge emits ON, the trailing edge OFF. Deterministic for a
/// fixed seed.
inline std::vector<Event> generate_edge_events(double t0_s, double t1_s, const StepperProfile& p,
                                               const HandModel& h, std::mt19937_64& rng) {
    if (t1_s <= t0_s) throw SceneConfigError("event generation needs t1 > t0");
    validate(p);
    validate(h, p);

    constexpr std::int64_t kBinUs = 1000;
    const std::int64_t t0_us = static_cast<std::int64_t>(std::llround(t0_s * 1e6));
    const std::int64_t t1_us = static_cast<std::int64_t>(std::llround(t1_s * 1e6));
    const std::vector<detail::EdgeSample> samples = detail::edge_samples(h);

    std::vector<Event> events;
    std::vector<Event> bin_events;
    for (std::int64_t ta = t0_us; ta < t1_us; ta += kBinUs) {
        const std::int64_t tb = std::min(ta + kBinUs, t1_us);
        const double angle_a = stepper_angle(ta * 1e-6, p);
        const double angle_b = stepper_angle(tb * 1e-6, p);
        if (angle_a == angle_b) continue;  // stepper dwelling, no brightness change
        const double angle_m = 0.5 * (angle_a + angle_b);
        const double th = angle_m * std::numbers::pi / 180.0;
        const Vec2 u{std::sin(th), -std::cos(th)};
        const Vec2 v{std::cos(th), std::sin(th)};

        bin_events.clear();
        for (const detail::EdgeSample& s : samples) {
            const Vec2 pa = hand_point(h, angle_a, s.lx, s.ly);
            const Vec2 pb = hand_point(h, angle_b, s.lx, s.ly);
            const double dx = pb.x - pa.x;
            const double dy = pb.y - pa.y;
            const double nx = s.nx_local * v.x + s.ny_local * u.x;
            const double ny = s.nx_local * v.y + s.ny_local * u.y;
            const double normal_disp = dx * nx + dy * ny;
            const double mu = h.rate_coeff * std::abs(normal_disp) * s.span;
            if (mu <= 0.0) continue;
            const int count = std::poisson_distribution<int>(mu)(rng);
            if (count == 0) continue;
            const Polarity pol = normal_disp > 0.0 ? Polarity::On : Polarity::Off;
            std::uniform_real_distribution<double> along_edge(-0.5 * s.span, 0.5 * s.span);
            std::uniform_int_distribution<std::int64_t> when(ta, tb - 1);
            for (int c = 0; c < count; ++c) {
                const double j = along_edge(rng);
                const double lx = s.jitter_lateral ? s.lx + j : s.lx;
                const double ly = s.jitter_lateral ? s.ly : s.ly + j;
                const Vec2 pos = hand_point(h, angle_m, lx, ly);
                Event e;
                e.x = static_cast<std::uint16_t>(
                    std::clamp<long>(std::lround(pos.x), 0, kSensorWidth - 1));
                e.y = static_cast<std::uint16_t>(
                    std::clamp<long>(std::lround(pos.y), 0, kSensorHeight - 1));
                e.ts = static_cast<std::uint32_t>(when(rng));
                e.pol = pol;
                bin_events.push_back(e);
            }
        }
        std::sort(bin_events.begin(), bin_events.end(), [](const Event& a, const Event& b) {
            return std::tie(a.ts, a.y, a.x, a.pol) < std::tie(b.ts, b.y, b.x, b.pol);
        });
        events.insert(events.end(), bin_events.begin(), bin_events.end());
    }
    return events;
}

inline std::vector<EventPacket> pack_events(const std::vector<Event>& events,
                                            std::size_t packet_size = 750) {
    std::vector<EventPacket> packets;
    EventPacket current;
    current.seq = 0;
    for (const Event& e : events) {
        current.events.push_back(e);
        if (current.events.size() == packet_size) {
            packets.push_back(std::move(current));
            current = EventPacket{};
            current.seq = static_cast<std::uint32_t>(packets.size());
        }
    }
    if (!current.events.empty()) packets.push_back(std::move(current));
    return packets;
}

/// Full synthetic capture: events over [t0, t1) grouped into 750-event
/// packets with increasing seq.
inline std::vector<EventPacket> generate_events(double t0_s, double t1_s,
                                                const StepperProfile& p, const HandModel& h,
                                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return pack_events(generate_edge_events(t0_s, t1_s, p, h, rng));
}

/// Hand-mounted gyro: the stepper angle differentiated by central finite
/// difference (half a sample period on each side), sampled at 200 Hz.
/// Pass sigma > 0 via add_gyro_noise for robustness experiments.
inline GyroTrace sample_gyro_master(std::int64_t t0_us, std::int64_t t1_us,
                                    const StepperProfile& p) {
    if (t1_us - t0_us < kGyroPeriodUs) {
        throw SceneConfigError("gyro trace needs at least one sample period");
    }
    GyroTrace trace;
    trace.t0_us = t0_us;
    const double h_s = 0.5 * kGyroPeriodUs * 1e-6;
    for (std::int64_t t = t0_us; t < t1_us; t += kGyroPeriodUs) {
        const double t_s = t * 1e-6;
        const double omega = (stepper_angle(t_s + h_s, p) - stepper_angle(t_s - h_s, p)) / (2.0 * h_s);
        trace.samples.push_back(omega);
    }
    return trace;
}

}  // namespace evlat
