#pragma once

#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "evlat/controller.hpp"
#include "evlat/event_file.hpp"
#include "evlat/latency.hpp"
#include "evlat/pipeline.hpp"
#include "evlat/scenario.hpp"
#include "evlat/scene.hpp"
#include "evlat/udp.hpp"
#include "evlat/wire.hpp"

namespace evlat {

/// One smoothed vision estimate and the joint reference derived from it.
struct VisionRecord {
    std::uint64_t item = 0;
    std::int64_t ts_us = 0;  // pipeline clock at roi_computed
    double cx = 0.0;
    double cy = 0.0;
    double ref_deg = 0.0;
};

struct JointRow {
    std::int64_t t_us = 0;
    double q_ref = 0.0;
    double q = 0.0;
    double qd = 0.0;
};

struct E2eResult {
    LatencyReport report;
    GyroTrace master;
    GyroTrace slave;
    std::vector<VisionRecord> vision;
    std::vector<JointRow> joints;
    std::size_t packets_in = 0;
    double publish_jitter_p99_ms = 0.0;  // real-time mode only
};

namespace detail {

inline std::int64_t ms_to_us(double ms) { return static_cast<std::int64_t>(std::llround(ms * 1000.0)); }

/// Modeled time from a reference being consumed at a tick until the
/// plant's motion reflects it. The commanded velocity responds to the
/// reference through (beta/T)(1 - z^-1)/(1 - (1-beta) z^-1), whose mean
/// delay is (1-beta)/beta ticks from the pole plus half a tick from the
/// differencing and hold. The instantaneous plant applies the reference
/// at the consuming tick itself.
inline std::int64_t plant_response_us(const ScenarioConfig& cfg) {
    if (cfg.plant == PlantMode::Instantaneous) return 0;
    const double beta = servo_blend(cfg.servo);
    return static_cast<std::int64_t>(
        std::llround(kPublishPeriodUs * (0.5 + (1.0 - beta) / beta)));
}

struct RefUpdate {
    std::int64_t visible_us = 0;  // when the plant-side publisher can see it
    std::uint64_t item = 0;
    double ref_deg = 0.0;
};

/// Drives the publish grid and plant over [0, duration) and fills in
/// joint rows, tick-state history and plant_applied stamps.
class PlantTrack {
  public:
    PlantTrack(const ScenarioConfig& cfg, StampLog& log) : cfg_(cfg), log_(log) {
        state_.q = cfg.elbow.nominal_deg;
        state_.ref = cfg.elbow.nominal_deg;
        response_us_ = plant_response_us(cfg);
    }

    void tick(std::int64_t nominal_us, std::int64_t stamp_us,
              const std::optional<RefUpdate>& update) {
        if (update && (!consumed_ || update->item != *consumed_)) {
            log_.record(update->item, Stage::PlantApplied, stamp_us + response_us_);
            consumed_ = update->item;
        }
        const double ref = update ? update->ref_deg : cfg_.elbow.nominal_deg;
        RobotState next;
        if (cfg_.plant == PlantMode::Instantaneous) {
            next.q = ref;
            next.qd = (ref - state_.q) / ServoConfig::tick_s;
            next.ref = ref;
            next.t_us = state_.t_us + kPublishPeriodUs;
        } else {
            next = servo_step(state_, ref, cfg_.servo);
        }
        joints.push_back({nominal_us, ref, state_.q, next.qd});
        history.push_back({state_.q, next.qd, ref, stamp_us});
        state_ = next;
    }

    std::vector<JointRow> joints;
    std::vector<RobotState> history;  // t_us = tick time, qd = velocity from that tick on

  private:
    const ScenarioConfig& cfg_;
    StampLog& log_;
    RobotState state_;
    std::int64_t response_us_ = 0;
    std::optional<std::uint64_t> consumed_;
};

inline void hybrid_sleep_until(std::chrono::steady_clock::time_point deadline) {
    constexpr auto kSpinWindow = std::chrono::microseconds(1500);
    if (deadline - std::chrono::steady_clock::now() > kSpinWindow) {
        std::this_thread::sleep_until(deadline - kSpinWindow);
    }
    while (std::chrono::steady_clock::now() < deadline) {
        // busy-wait through the last stretch to keep the tick tight
    }
}

/// Best-effort real-time priority for the publish loop; without the
/// privilege the loop still runs, just at normal priority.
class ScopedRtPriority {
  public:
    ScopedRtPriority() {
        sched_param sp{};
        pthread_getschedparam(pthread_self(), &old_policy_, &old_param_);
        sp.sched_priority = 10;
        elevated_ = pthread_setschedparam(pthread_self(), SCHED_FIFO, &sp) == 0;
    }

    ~ScopedRtPriority() {
        if (elevated_) pthread_setschedparam(pthread_self(), old_policy_, &old_param_);
    }

    ScopedRtPriority(const ScopedRtPriority&) = delete;
    ScopedRtPriority& operator=(const ScopedRtPriority&) = delete;

  private:
    int old_policy_ = SCHED_OTHER;
    sched_param old_param_{};
    bool elevated_ = false;
};

}  // namespace detail

/// Deterministic single-threaded run over the virtual clock. Injected
/// delays are pure latencies: every packet flows through the vision
/// stages as a pipelined shift, and the publish grid consumes the most
/// recent visible reference at each 8 ms tick.
inline E2eResult run_pipeline_virtual(const ScenarioConfig& cfg,
                                      const std::vector<EventPacket>& packets) {
    const std::int64_t dur_us = detail::ms_to_us(cfg.duration_s * 1000.0);
    const InjectedDelays& d = cfg.delays;

    E2eResult result;
    result.packets_in = packets.size();
    StampLog log;
    NoiseFilter filter(cfg.correlation_window_us);
    EventWindow window(cfg.roi);
    CenterSmoother smoother;
    std::vector<detail::RefUpdate> updates;

    for (const EventPacket& packet : packets) {
        if (packet.events.empty()) continue;
        const std::uint64_t item = packet.seq;
        const std::int64_t t_gen = static_cast<std::int64_t>(packet.events.back().ts);
        log.record(item, Stage::Generated, t_gen);
        const std::int64_t t_cap = t_gen + detail::ms_to_us(d.capture_ms);
        log.record(item, Stage::Captured, t_cap);
        const EventPacket filtered = filter.process(packet);
        const std::int64_t t_filt = t_cap + detail::ms_to_us(d.link1_ms);
        log.record(item, Stage::Filtered, t_filt);
        window.push(filtered);
        const std::optional<RoiEstimate> roi = compute_roi(window.events(), cfg.roi);
        if (!roi) continue;
        const auto [cx, cy] = smoother.smooth(roi->cx, roi->cy);
        const std::int64_t t_roi = t_filt + detail::ms_to_us(d.processing_ms);
        log.record(item, Stage::RoiComputed, t_roi);
        log.record(item, Stage::RoiSent, t_roi);
        const std::int64_t t_rcvd = t_roi + detail::ms_to_us(d.link2_ms);
        log.record(item, Stage::RoiReceived, t_rcvd);
        const double ref = map_center_to_angle(cx, cy, cfg.elbow);
        const std::int64_t t_pub = t_rcvd + detail::ms_to_us(d.command_ms);
        log.record(item, Stage::CommandPublished, t_pub);
        result.vision.push_back({item, t_roi, cx, cy, ref});
        updates.push_back({t_pub + detail::ms_to_us(d.link3_ms), item, ref});
    }

    detail::PlantTrack plant(cfg, log);
    std::size_t next_update = 0;
    std::optional<detail::RefUpdate> current;
    const std::size_t ticks = publish_tick_count(dur_us);
    for (std::size_t k = 0; k < ticks; ++k) {
        const std::int64_t t_k = static_cast<std::int64_t>(k) * kPublishPeriodUs;
        while (next_update < updates.size() && updates[next_update].visible_us <= t_k) {
            current = updates[next_update++];
        }
        plant.tick(t_k, t_k, current);
    }
    result.joints = std::move(plant.joints);

    if (dur_us >= kGyroPeriodUs) {
        result.master = sample_gyro_master(0, dur_us, cfg.stepper);
        result.slave = sample_gyro_slave(plant.history, 0, dur_us);
        add_gyro_noise(result.master, cfg.gyro_noise_sigma_dps, cfg.seed ^ 0x9E3779B97F4A7C15ull);
        add_gyro_noise(result.slave, cfg.gyro_noise_sigma_dps, cfg.seed ^ 0xC2B2AE3D27D4EB4Full);
    }

    const std::vector<StageStamp> stamps = log.snapshot();
    if (stamps.empty()) {
        result.report = LatencyReport{};
    } else if (cfg.estimate_total_delay && !result.vision.empty()) {
        result.report = build_report(stamps, &result.master, &result.slave);
    } else {
        result.report = build_report(stamps);
    }
    return result;
}

inline E2eResult run_e2e_virtual(const ScenarioConfig& cfg) {
    validate(cfg);
    const std::vector<EventPacket> packets =
        generate_events(0.0, cfg.duration_s, cfg.stepper, cfg.hand, cfg.seed);
    return run_pipeline_virtual(cfg, packets);
}

/// Replays a captured .evt file through the identical downstream
/// pipeline; the master gyro trace is reconstructed from the scenario's
/// stepper profile.
inline E2eResult replay_file(const std::string& path, const ScenarioConfig& cfg) {
    validate(cfg);
    std::vector<EventPacket> packets;
    EventFileReader reader(path);
    while (auto p = reader.next()) packets.push_back(std::move(*p));
    return run_pipeline_virtual(cfg, packets);
}

/// Real-time run: the same stages as threads of one process, joined by
/// genuine UDP datagrams on the loopback interface. Injected delays
/// become sleeps, so a stage that is slower than its input cadence
/// falls behind exactly as a real deployment would.
inline E2eResult run_e2e_real(const ScenarioConfig& cfg) {
    using clock = std::chrono::steady_clock;
    validate(cfg);
    const std::int64_t dur_us = detail::ms_to_us(cfg.duration_s * 1000.0);
    const InjectedDelays& d = cfg.delays;
    const std::vector<EventPacket> packets =
        generate_events(0.0, cfg.duration_s, cfg.stepper, cfg.hand, cfg.seed);

    E2eResult result;
    result.packets_in = packets.size();
    StampLog log;

    // Receivers bind before any sender starts.
    UdpReceiver event_rx(cfg.net.address, cfg.net.event_port);
    UdpReceiver roi_rx(cfg.net.address, cfg.net.roi_port);

    const auto start = clock::now();
    auto now_us = [&start] {
        return std::chrono::duration_cast<std::chrono::microseconds>(clock::now() - start).count();
    };
    auto at_us = [&start](std::int64_t t) { return start + std::chrono::microseconds(t); };

    std::atomic<bool> capture_done{false};
    std::atomic<bool> client_done{false};

    struct RefCell {
        std::mutex m;
        std::optional<detail::RefUpdate> value;
    } cell;

    std::thread capture([&] {
        UdpSender tx(cfg.net.address, cfg.net.event_port);
        // Frame everything up front so the paced loop does no bulk work.
        std::vector<std::vector<std::uint8_t>> frames;
        frames.reserve(packets.size());
        for (const EventPacket& packet : packets) {
            frames.push_back(packet.events.empty() ? std::vector<std::uint8_t>{}
                                                   : frame_events(packet.seq, packet));
        }
        for (std::size_t i = 0; i < packets.size(); ++i) {
            if (frames[i].empty()) continue;
            const EventPacket& packet = packets[i];
            const std::int64_t t_gen = static_cast<std::int64_t>(packet.events.back().ts);
            log.record(packet.seq, Stage::Generated, t_gen);
            std::this_thread::sleep_until(at_us(t_gen + detail::ms_to_us(d.capture_ms)));
            log.record(packet.seq, Stage::Captured, now_us());
            if (d.link1_ms > 0.0) {
                std::this_thread::sleep_for(std::chrono::microseconds(detail::ms_to_us(d.link1_ms)));
            }
            tx.send(frames[i]);
        }
        capture_done = true;
    });

    std::vector<VisionRecord> vision;
    std::thread client([&] {
        UdpSender tx(cfg.net.address, cfg.net.roi_port);
        NoiseFilter filter(cfg.correlation_window_us);
        EventWindow window(cfg.roi);
        CenterSmoother smoother;
        for (;;) {
            const auto payload = event_rx.next(20);
            if (!payload) {
                if (capture_done) break;
                continue;
            }
            const auto [seq, packet] = parse_events(*payload);
            const EventPacket filtered = filter.process(packet);
            log.record(seq, Stage::Filtered, now_us());
            window.push(filtered);
            const std::optional<RoiEstimate> roi = compute_roi(window.events(), cfg.roi);
            if (!roi) continue;
            const auto [cx, cy] = smoother.smooth(roi->cx, roi->cy);
            if (d.processing_ms > 0.0) {
                std::this_thread::sleep_for(
                    std::chrono::microseconds(detail::ms_to_us(d.processing_ms)));
            }
            const std::int64_t t_roi = now_us();
            log.record(seq, Stage::RoiComputed, t_roi);
            vision.push_back({seq, t_roi, cx, cy, map_center_to_angle(cx, cy, cfg.elbow)});
            log.record(seq, Stage::RoiSent, now_us());
            tx.send(frame_roi(seq, static_cast<std::uint64_t>(t_roi), static_cast<float>(cx),
                              static_cast<float>(cy)));
        }
        client_done = true;
    });

    std::thread server([&] {
        for (;;) {
            const auto payload = roi_rx.next(20);
            if (!payload) {
                if (client_done) break;
                continue;
            }
            const RoiMessage msg = parse_roi(*payload);
            log.record(msg.seq, Stage::RoiReceived, now_us());
            if (d.command_ms > 0.0) {
                std::this_thread::sleep_for(std::chrono::microseconds(detail::ms_to_us(d.command_ms)));
            }
            const double ref = map_center_to_angle(msg.cx, msg.cy, cfg.elbow);
            log.record(msg.seq, Stage::CommandPublished, now_us());
            if (d.link3_ms > 0.0) {
                std::this_thread::sleep_for(std::chrono::microseconds(detail::ms_to_us(d.link3_ms)));
            }
            std::lock_guard<std::mutex> lock(cell.m);
            cell.value = detail::RefUpdate{now_us(), msg.seq, ref};
        }
    });

    detail::PlantTrack plant(cfg, log);
    std::vector<double> jitter_ms;
    const std::size_t ticks = publish_tick_count(dur_us);
    jitter_ms.reserve(ticks);
    detail::ScopedRtPriority rt_priority;
    for (std::size_t k = 0; k < ticks; ++k) {
        const std::int64_t nominal = static_cast<std::int64_t>(k) * kPublishPeriodUs;
        detail::hybrid_sleep_until(at_us(nominal));
        const std::int64_t t_k = now_us();
        jitter_ms.push_back(std::abs(static_cast<double>(t_k - nominal)) / 1000.0);
        std::optional<detail::RefUpdate> update;
        {
            std::lock_guard<std::mutex> lock(cell.m);
            update = cell.value;
        }
        plant.tick(nominal, t_k, update);
    }

    capture.join();
    client.join();
    server.join();

    result.vision = std::move(vision);
    result.joints = std::move(plant.joints);
    if (!jitter_ms.empty()) {
        std::sort(jitter_ms.begin(), jitter_ms.end());
        const std::size_t idx = static_cast<std::size_t>(
            std::ceil(0.99 * static_cast<double>(jitter_ms.size())));
        result.publish_jitter_p99_ms = jitter_ms[std::min(jitter_ms.size() - 1, idx == 0 ? 0 : idx - 1)];
    }

    if (dur_us >= kGyroPeriodUs) {
        result.master = sample_gyro_master(0, dur_us, cfg.stepper);
        result.slave = sample_gyro_slave(plant.history, 0, dur_us);
        add_gyro_noise(result.master, cfg.gyro_noise_sigma_dps, cfg.seed ^ 0x9E3779B97F4A7C15ull);
        add_gyro_noise(result.slave, cfg.gyro_noise_sigma_dps, cfg.seed ^ 0xC2B2AE3D27D4EB4Full);
    }

    const std::vector<StageStamp> stamps = log.snapshot();
    if (stamps.empty()) {
        result.report = LatencyReport{};
    } else if (cfg.estimate_total_delay && !result.vision.empty()) {
        result.report = build_report(stamps, &result.master, &result.slave);
    } else {
        result.report = build_report(stamps);
    }
    return result;
}

inline E2eResult run_e2e(const ScenarioConfig& cfg) {
    return cfg.mode == RunMode::VirtualTime ? run_e2e_virtual(cfg) : run_e2e_real(cfg);
}

// ---------------------------------------------------------------------------
// Artifact output

inline void write_joints_csv(const std::string& path, const std::vector<JointRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "t_us,q_ref_deg,q_deg,qd_dps\n";
    char line[128];
    for (const JointRow& r : rows) {
        std::snprintf(line, sizeof line, "%lld,%.6f,%.6f,%.6f\n", static_cast<long long>(r.t_us),
                      r.q_ref, r.q, r.qd);
        out << line;
    }
}

inline void write_vision_csv(const std::string& path, const std::vector<VisionRecord>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "item,ts_us,cx,cy,ref_deg\n";
    char line[160];
    for (const VisionRecord& r : rows) {
        std::snprintf(line, sizeof line, "%llu,%lld,%.6f,%.6f,%.6f\n",
                      static_cast<unsigned long long>(r.item), static_cast<long long>(r.ts_us),
                      r.cx, r.cy, r.ref_deg);
        out << line;
    }
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

/// Writes the full artifact bundle for one run into out_dir.
inline void write_artifacts(const E2eResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text_file((dir / "report.txt").string(), render_report_text(result.report));
    write_text_file((dir / "report.csv").string(), render_report_csv(result.report));
    write_joints_csv((dir / "joints.csv").string(), result.joints);
    write_vision_csv((dir / "roi_centers.csv").string(), result.vision);
    if (!result.master.samples.empty()) {
        write_gyro_csv((dir / "gyro_master.csv").string(), result.master);
    }
    if (!result.slave.samples.empty()) {
        write_gyro_csv((dir / "gyro_slave.csv").string(), result.slave);
    }
}

}  // namespace evlat
