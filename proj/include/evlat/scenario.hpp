#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "evlat/controller.hpp"
#include "evlat/pipeline.hpp"
#include "evlat/scene.hpp"

namespace evlat {

class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

enum class RunMode { VirtualTime, RealTime };

enum class PlantMode { Servo, Instantaneous };

/// Per-stage latencies injected into the pipeline, in milliseconds.
/// Defaults mirror the three delays the reference system could measure;
/// the links it could not measure default to zero and stay configurable.
struct InjectedDelays {
    double capture_ms = 6.0;
    double link1_ms = 0.0;
    double processing_ms = 9.0;
    double link2_ms = 0.0;
    double command_ms = 4.0;
    double link3_ms = 0.0;
};

struct NetConfig {
    std::string address = "127.0.0.1";
    std::uint16_t event_port = 17771;
    std::uint16_t roi_port = 17772;
};

struct ScenarioConfig {
    RunMode mode = RunMode::VirtualTime;
    double duration_s = 6.0;
    std::uint64_t seed = 1;
    StepperProfile stepper;
    HandModel hand;
    RoiConfig roi;
    std::int64_t correlation_window_us = 2000;  // noise filter window
    ServoConfig servo;
    PlantMode plant = PlantMode::Servo;
    ElbowMapConfig elbow;
    JointVector joint_constants{{0.0, -90.0, 0.0, -90.0, 0.0, 0.0}};
    InjectedDelays delays;
    double gyro_noise_sigma_dps = 0.5;
    bool estimate_total_delay = true;  // run the gyro cross-correlation in reports
    NetConfig net;
};

inline void validate(const ScenarioConfig& cfg) {
    auto wrap = [](const char* field, auto&& fn) {
        try {
            fn();
        } catch (const std::runtime_error& err) {
            throw ConfigError(field, err.what());
        }
    };
    if (cfg.duration_s <= 0.0) throw ConfigError("duration", "must be > 0 seconds");
    if (cfg.estimate_total_delay && cfg.duration_s < 4.0) {
        throw ConfigError("duration",
                          "delay estimation needs >= 4 s (two motion periods at 0.5 Hz)");
    }
    wrap("stepper", [&] { validate(cfg.stepper); });
    wrap("hand", [&] { validate(cfg.hand, cfg.stepper); });
    wrap("servo", [&] { validate(cfg.servo); });
    wrap("elbow", [&] { validate(cfg.elbow); });
    if (cfg.correlation_window_us <= 0) {
        throw ConfigError("pipeline.correlation_window_us", "must be > 0");
    }
    if (cfg.roi.window_us <= 0) throw ConfigError("pipeline.roi_window_us", "must be > 0");
    if (cfg.roi.max_events == 0) throw ConfigError("pipeline.roi_max_events", "must be > 0");
    if (cfg.roi.activity_factor <= 0.0) {
        throw ConfigError("pipeline.activity_factor", "must be > 0");
    }
    if (cfg.roi.smooth_radius < 0) throw ConfigError("pipeline.smooth_radius", "must be >= 0");
    if (cfg.delays.capture_ms < 0.0 || cfg.delays.link1_ms < 0.0 ||
        cfg.delays.processing_ms < 0.0 || cfg.delays.link2_ms < 0.0 ||
        cfg.delays.command_ms < 0.0 || cfg.delays.link3_ms < 0.0) {
        throw ConfigError("delays", "injected delays must be >= 0");
    }
    if (cfg.gyro_noise_sigma_dps < 0.0) throw ConfigError("gyro.noise_sigma", "must be >= 0");
}

}  // namespace evlat
