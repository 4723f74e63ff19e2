#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "evlat/event.hpp"
#include "evlat/gyro.hpp"

namespace evlat {

class ControllerConfigError : public std::runtime_error {
  public:
    explicit ControllerConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr std::int64_t kPublishPeriodUs = 8000;  // 125 Hz controller rate

/// Maps an image-space ROI center to the actuated joint's reference:
/// the angle of the center with respect to the vertical axis through
/// the pivot, clamped, signed, and offset by the nominal joint angle.
struct ElbowMapConfig {
    double pivot_x = 120.0;
    double pivot_y = 160.0;
    double nominal_deg = 0.0;
    double sign = 1.0;       // +1: image right = positive joint displacement
    double clamp_deg = 36.0;
};

inline void validate(const ElbowMapConfig& cfg) {
    if (cfg.clamp_deg <= 0.0) throw ControllerConfigError("elbow clamp must be > 0");
    if (cfg.sign != 1.0 && cfg.sign != -1.0) throw ControllerConfigError("elbow sign must be +1 or -1");
    if (cfg.pivot_x < 0.0 || cfg.pivot_x > kSensorWidth || cfg.pivot_y < 0.0 ||
        cfg.pivot_y > kSensorHeight) {
        throw ControllerConfigError("elbow pivot must lie inside the sensor frame");
    }
}

/// Angle of (cx, cy) from the vertical axis through the pivot, in
/// degrees, positive toward image right. A center exactly on the pivot
/// has no direction; it maps to the nominal angle rather than failing,
/// so a transient degenerate ROI cannot kill a live control loop.
inline double map_center_to_angle(double cx, double cy, const ElbowMapConfig& cfg) {
    const double dx = cx - cfg.pivot_x;
    const double dy = cfg.pivot_y - cy;  // image y grows downward
    if (dx == 0.0 && dy == 0.0) return cfg.nominal_deg;
    const double img_deg = std::atan2(dx, dy) * 180.0 / std::numbers::pi;
    return cfg.nominal_deg + cfg.sign * std::clamp(img_deg, -cfg.clamp_deg, cfg.clamp_deg);
}

enum class Joint { Base = 0, Shoulder = 1, Elbow = 2, Wrist1 = 3, Wrist2 = 4, Wrist3 = 5 };

/// Six joint reference angles in degrees. Only the Elbow entry varies;
/// the rest stay at their configured constants.
struct JointVector {
    std::array<double, 6> q{};

    double& operator[](Joint j) { return q[static_cast<std::size_t>(j)]; }
    double operator[](Joint j) const { return q[static_cast<std::size_t>(j)]; }
};

struct ServoConfig {
    double gain = 1000.0;        // [100, 2000]
    double lookahead_s = 0.08;   // [0.03, 0.2]
    double vel_limit_dps = 180.0;
    double acc_limit_dps2 = 600.0;
    static constexpr double tick_s = 0.008;
};

inline void validate(const ServoConfig& cfg) {
    if (cfg.gain < 100.0 || cfg.gain > 2000.0) {
        throw ControllerConfigError("servo gain must be in [100, 2000]");
    }
    if (cfg.lookahead_s < 0.03 || cfg.lookahead_s > 0.2) {
        throw ControllerConfigError("servo lookahead_time must be in [0.03, 0.2]");
    }
    if (cfg.vel_limit_dps <= 0.0 || cfg.acc_limit_dps2 <= 0.0) {
        throw ControllerConfigError("servo velocity and acceleration limits must be > 0");
    }
}

struct RobotState {
    double q = 0.0;    // joint angle, degrees
    double qd = 0.0;   // joint velocity, deg/s
    double ref = 0.0;  // last applied reference, degrees
    std::int64_t t_us = 0;
};

/// Discrete stand-in for the robot's position servo, stepped once per
/// 8 ms tick. The reference is first pulled toward the current position
/// by the lookahead filter, then tracked proportionally (gain 1000 maps
/// to a unit factor), with hard velocity and acceleration clamps.
inline RobotState servo_step(const RobotState& state, double ref, const ServoConfig& cfg) {
    const double tick = ServoConfig::tick_s;
    const double look = std::min(1.0, tick / cfg.lookahead_s);
    const double target = state.q + (ref - state.q) * look;
    double v = (cfg.gain / 1000.0) * (target - state.q) / tick;
    v = std::clamp(v, -cfg.vel_limit_dps, cfg.vel_limit_dps);
    const double dv_max = cfg.acc_limit_dps2 * tick;
    v = std::clamp(v, state.qd - dv_max, state.qd + dv_max);
    v = std::clamp(v, -cfg.vel_limit_dps, cfg.vel_limit_dps);
    RobotState next;
    next.q = state.q + v * tick;
    next.qd = v;
    next.ref = ref;
    next.t_us = state.t_us + kPublishPeriodUs;
    return next;
}

/// Blend factor of one servo tick; 1/beta ticks is the plant's mean
/// response time in the unclamped regime.
inline double servo_blend(const ServoConfig& cfg) {
    return (cfg.gain / 1000.0) * std::min(1.0, ServoConfig::tick_s / cfg.lookahead_s);
}

/// Robot-mounted gyro: plant velocity resampled at 200 Hz by linear
/// interpolation between tick states.
inline GyroTrace sample_gyro_slave(const std::vector<RobotState>& history, std::int64_t t0_us,
                                   std::int64_t t1_us) {
    if (history.size() < 2) throw ControllerConfigError("gyro resampling needs >= 2 tick states");
    GyroTrace trace;
    trace.t0_us = t0_us;
    std::size_t hi = 1;
    for (std::int64_t t = t0_us; t < t1_us; t += kGyroPeriodUs) {
        while (hi + 1 < history.size() && history[hi].t_us < t) ++hi;
        const RobotState& a = history[hi - 1];
        const RobotState& b = history[hi];
        double qd;
        if (t <= a.t_us) {
            qd = a.qd;
        } else if (t >= b.t_us) {
            qd = b.qd;
        } else {
            const double alpha = static_cast<double>(t - a.t_us) / static_cast<double>(b.t_us - a.t_us);
            qd = a.qd + alpha * (b.qd - a.qd);
        }
        trace.samples.push_back(qd);
    }
    return trace;
}

/// Virtual-time publish grid: emissions at k * 8 ms for k in
/// [0, floor(duration / 8 ms)), one emission per tick regardless of
/// whether the reference was updated.
inline std::size_t publish_tick_count(std::int64_t duration_us) {
    return static_cast<std::size_t>(duration_us / kPublishPeriodUs);
}

}  // namespace evlat
