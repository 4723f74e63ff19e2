// evlat command-line front end: scenario runs, event capture files,
// replay, and offline delay measurement between gyro trace CSVs.

#include <cmath>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "evlat/engine.hpp"
#include "evlat/event_file.hpp"
#include "evlat/gyro.hpp"
#include "evlat/latency.hpp"
#include "evlat/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct ScenarioFlags {
    evlat::ScenarioConfig cfg;
    std::string mode = "virtual-time";
    std::string plant = "servo";

    void resolve() {
        cfg.mode = mode == "real-time" ? evlat::RunMode::RealTime : evlat::RunMode::VirtualTime;
        cfg.plant = plant == "instantaneous" ? evlat::PlantMode::Instantaneous
                                             : evlat::PlantMode::Servo;
    }
};

// Scenario options live on the root app so that one flat `key = value`
// scenario file (--config) serves every subcommand; fallthrough lets
// them appear after the subcommand name too.
void add_scenario_flags(CLI::App& app, ScenarioFlags& f) {
    evlat::ScenarioConfig& c = f.cfg;
    app.set_config("--config", "", "scenario file, flat `key = value` lines");
    app.add_option("--mode", f.mode, "virtual-time or real-time")
        ->check(CLI::IsMember({"virtual-time", "real-time"}))
        ->capture_default_str();
    app.add_option("--duration", c.duration_s, "run length, seconds")->capture_default_str();
    app.add_option("--seed", c.seed, "RNG seed for event synthesis and gyro noise")
        ->capture_default_str();
    app.add_option("--estimate-delay", c.estimate_total_delay,
                   "run gyro cross-correlation in the report")
        ->capture_default_str();

    app.add_option("--stepper-amplitude-deg", c.stepper.amplitude_deg,
                   "sinusoid amplitude, degrees")
        ->capture_default_str();
    app.add_option("--stepper-frequency-hz", c.stepper.frequency_hz, "sinusoid frequency, Hz")
        ->capture_default_str();
    app.add_option("--stepper-step-deg", c.stepper.step_deg, "microstep quantum, degrees")
        ->capture_default_str();
    app.add_option("--stepper-phase-rad", c.stepper.phase_rad, "sinusoid phase, radians")
        ->capture_default_str();

    app.add_option("--hand-pivot-x", c.hand.pivot_x, "rotation axis, image x")
        ->capture_default_str();
    app.add_option("--hand-pivot-y", c.hand.pivot_y, "rotation axis, image y")
        ->capture_default_str();
    app.add_option("--hand-arm-px", c.hand.arm_px, "pivot to hand center, pixels")
        ->capture_default_str();
    app.add_option("--hand-width-px", c.hand.width_px, "hand rectangle width, pixels")
        ->capture_default_str();
    app.add_option("--hand-height-px", c.hand.height_px, "hand rectangle height, pixels")
        ->capture_default_str();
    app.add_option("--hand-rate-coeff", c.hand.rate_coeff,
                   "events per edge pixel per pixel of normal displacement")
        ->capture_default_str();

    app.add_option("--noise-window-us", c.correlation_window_us,
                   "noise filter correlation window, microseconds")
        ->capture_default_str();
    app.add_option("--roi-window-us", c.roi.window_us,
                   "ROI event window span cap, microseconds")
        ->capture_default_str();
    app.add_option("--roi-max-events", c.roi.max_events, "ROI event window size cap")
        ->capture_default_str();
    app.add_option("--roi-activity-factor", c.roi.activity_factor,
                   "ROI threshold as a multiple of mean activity")
        ->capture_default_str();
    app.add_option("--roi-smooth-radius", c.roi.smooth_radius,
                   "box smoothing radius for activity histograms")
        ->capture_default_str();
    app.add_option("--roi-min-support", c.roi.min_support,
                   "minimum events inside the bbox to emit an estimate")
        ->capture_default_str();

    app.add_option("--servo-gain", c.servo.gain, "servo gain, 100-2000")->capture_default_str();
    app.add_option("--servo-lookahead-s", c.servo.lookahead_s, "servo lookahead time, 0.03-0.2 s")
        ->capture_default_str();
    app.add_option("--servo-vel-limit", c.servo.vel_limit_dps, "joint speed limit, deg/s")
        ->capture_default_str();
    app.add_option("--servo-acc-limit", c.servo.acc_limit_dps2,
                   "joint acceleration limit, deg/s^2")
        ->capture_default_str();
    app.add_option("--plant", f.plant, "servo or instantaneous")
        ->check(CLI::IsMember({"servo", "instantaneous"}))
        ->capture_default_str();

    app.add_option("--elbow-pivot-x", c.elbow.pivot_x, "nominal axis origin, image x")
        ->capture_default_str();
    app.add_option("--elbow-pivot-y", c.elbow.pivot_y, "nominal axis origin, image y")
        ->capture_default_str();
    app.add_option("--elbow-nominal-deg", c.elbow.nominal_deg,
                   "joint angle when the hand sits on the nominal axis")
        ->capture_default_str();
    app.add_option("--elbow-sign", c.elbow.sign, "+1 or -1, image angle to joint angle")
        ->capture_default_str();
    app.add_option("--elbow-clamp-deg", c.elbow.clamp_deg, "symmetric reference clamp, degrees")
        ->capture_default_str();

    app.add_option("--joint-base", c.joint_constants[evlat::Joint::Base],
                   "constant Base angle, degrees")
        ->capture_default_str();
    app.add_option("--joint-shoulder", c.joint_constants[evlat::Joint::Shoulder],
                   "constant Shoulder angle, degrees")
        ->capture_default_str();
    app.add_option("--joint-wrist1", c.joint_constants[evlat::Joint::Wrist1],
                   "constant Wrist1 angle, degrees")
        ->capture_default_str();
    app.add_option("--joint-wrist2", c.joint_constants[evlat::Joint::Wrist2],
                   "constant Wrist2 angle, degrees")
        ->capture_default_str();
    app.add_option("--joint-wrist3", c.joint_constants[evlat::Joint::Wrist3],
                   "constant Wrist3 angle, degrees")
        ->capture_default_str();

    app.add_option("--delay-capture-ms", c.delays.capture_ms, "injected capture latency, ms")
        ->capture_default_str();
    app.add_option("--delay-link1-ms", c.delays.link1_ms, "injected event-link latency, ms")
        ->capture_default_str();
    app.add_option("--delay-processing-ms", c.delays.processing_ms,
                   "injected event-processing latency, ms")
        ->capture_default_str();
    app.add_option("--delay-link2-ms", c.delays.link2_ms, "injected roi-link latency, ms")
        ->capture_default_str();
    app.add_option("--delay-command-ms", c.delays.command_ms,
                   "injected command-generation latency, ms")
        ->capture_default_str();
    app.add_option("--delay-link3-ms", c.delays.link3_ms, "injected robot-link latency, ms")
        ->capture_default_str();

    app.add_option("--gyro-noise-sigma", c.gyro_noise_sigma_dps,
                   "gyro noise standard deviation, deg/s")
        ->capture_default_str();

    app.add_option("--net-address", c.net.address, "loopback address for real-time sockets")
        ->capture_default_str();
    app.add_option("--net-event-port", c.net.event_port, "UDP port of the event link")
        ->capture_default_str();
    app.add_option("--net-roi-port", c.net.roi_port, "UDP port of the roi link")
        ->capture_default_str();
}

int run_e2e_cmd(const ScenarioFlags& flags, const std::string& out_dir) {
    const evlat::E2eResult result = evlat::run_e2e(flags.cfg);
    evlat::write_artifacts(result, out_dir);
    std::fputs(evlat::render_report_text(result.report).c_str(), stdout);
    if (flags.cfg.mode == evlat::RunMode::RealTime) {
        std::printf("publish jitter p99: %.3f ms\n", result.publish_jitter_p99_ms);
    }
    std::printf("artifacts written to %s\n", out_dir.c_str());
    return kExitOk;
}

int gen_events_cmd(const ScenarioFlags& flags, const std::string& out_path) {
    evlat::ScenarioConfig cfg = flags.cfg;
    cfg.estimate_total_delay = false;  // no estimation happens here, any duration is fine
    evlat::validate(cfg);
    const auto packets =
        evlat::generate_events(0.0, cfg.duration_s, cfg.stepper, cfg.hand, cfg.seed);
    evlat::write_event_file(out_path, packets);
    std::size_t events = 0;
    for (const auto& p : packets) events += p.events.size();
    std::printf("wrote %zu packets (%zu events) to %s\n", packets.size(), events,
                out_path.c_str());
    return kExitOk;
}

int replay_cmd(const ScenarioFlags& flags, const std::string& in_path,
               const std::string& out_dir) {
    const evlat::E2eResult result = evlat::replay_file(in_path, flags.cfg);
    evlat::write_artifacts(result, out_dir);
    std::fputs(evlat::render_report_text(result.report).c_str(), stdout);
    std::printf("artifacts written to %s\n", out_dir.c_str());
    return kExitOk;
}

int measure_latency_cmd(const std::string& master_csv, const std::string& slave_csv,
                        int max_lag_samples) {
    const evlat::GyroTrace master = evlat::read_gyro_csv(master_csv);
    const evlat::GyroTrace slave = evlat::read_gyro_csv(slave_csv);
    const evlat::DelayEstimate est = evlat::estimate_delay_full(master, slave, max_lag_samples);
    std::printf("delay: %.3f ms\n", est.delay_ms);
    std::printf("peak lag: %d samples (%.1f ms before refinement)\n", est.peak_lag_samples,
                est.peak_lag_samples * static_cast<double>(master.period_us) / 1000.0);
    std::printf("normalized peak correlation: %.3f\n", est.peak_corr);
    if (std::isinf(est.peak_ratio)) {
        std::printf("peak/side-peak ratio: inf (no secondary peak in the search window)\n");
    } else {
        std::printf("peak/side-peak ratio: %.2f\n", est.peak_ratio);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-camera to robot actuation chain simulator with latency decomposition"};
    app.require_subcommand(1);
    app.allow_config_extras(CLI::config_extras_mode::error);

    ScenarioFlags flags;
    add_scenario_flags(app, flags);

    std::string e2e_out = "out";
    CLI::App* e2e = app.add_subcommand("run-e2e", "run the full chain and write a report bundle");
    e2e->fallthrough();
    e2e->add_option("--out-dir", e2e_out, "artifact directory")->capture_default_str();

    std::string gen_out;
    CLI::App* gen = app.add_subcommand("gen-events", "synthesize an event capture file (.evt)");
    gen->fallthrough();
    gen->add_option("--out", gen_out, "output .evt path")->required();

    std::string replay_in;
    std::string replay_out = "out";
    CLI::App* rep = app.add_subcommand("replay", "run the downstream pipeline from a .evt file");
    rep->fallthrough();
    rep->add_option("--in", replay_in, "input .evt path")->required();
    rep->add_option("--out-dir", replay_out, "artifact directory")->capture_default_str();

    std::string master_csv, slave_csv;
    int max_lag = 200;
    CLI::App* meas =
        app.add_subcommand("measure-latency", "cross-correlate two gyro trace CSVs");
    meas->fallthrough();
    meas->add_option("master_csv", master_csv, "master (hand) trace")->required();
    meas->add_option("slave_csv", slave_csv, "slave (robot) trace")->required();
    meas->add_option("--max-lag-samples", max_lag, "lag search bound, samples")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        flags.resolve();
        if (*e2e) return run_e2e_cmd(flags, e2e_out);
        if (*gen) return gen_events_cmd(flags, gen_out);
        if (*rep) return replay_cmd(flags, replay_in, replay_out);
        if (*meas) return measure_latency_cmd(master_csv, slave_csv, max_lag);
    } catch (const evlat::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitValidation;
    } catch (const evlat::SceneConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitValidation;
    } catch (const evlat::ControllerConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitValidation;
    } catch (const evlat::TraceMismatchError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}
