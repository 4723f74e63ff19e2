#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "evlat/gyro.hpp"

namespace evlat {

class FlatTraceError : public std::runtime_error {
  public:
    FlatTraceError() : std::runtime_error("cross-correlation delay is undefined for a flat trace") {}
};

class InsufficientOverlapError : public std::runtime_error {
  public:
    explicit InsufficientOverlapError(const std::string& what) : std::runtime_error(what) {}
};

class TraceMismatchError : public std::runtime_error {
  public:
    explicit TraceMismatchError(const std::string& what) : std::runtime_error(what) {}
};

struct DelayEstimate {
    double delay_ms = 0.0;
    int peak_lag_samples = 0;       // argmax before sub-sample refinement
    double peak_value = 0.0;        // raw correlation at the peak
    double peak_corr = 0.0;         // normalized peak, 1.0 = perfect match
    double peak_ratio = 0.0;        // peak vs best peak outside the main lobe
};

/// Cross-correlation delay between two equal-rate traces, searched over
/// non-negative lags (the robot cannot lead the hand) and refined by
/// parabolic interpolation around the peak. Positive result: slave lags
/// master. Traces are zero-meaned first, which also makes the estimate
/// invariant to amplitude scaling and constant offsets.
inline DelayEstimate estimate_delay_full(const GyroTrace& master, const GyroTrace& slave,
                                         int max_lag_samples = 200) {
    if (master.period_us != slave.period_us) {
        throw TraceMismatchError("gyro traces have different sampling rates: " +
                                 std::to_string(master.period_us) + " vs " +
                                 std::to_string(slave.period_us) + " us");
    }
    if (master.period_us <= 0) throw TraceMismatchError("gyro sample period must be positive");
    const std::int64_t t0_offset_us = slave.t0_us - master.t0_us;
    if (t0_offset_us % master.period_us != 0) {
        throw TraceMismatchError("gyro traces are not sample-aligned");
    }

    const int n = static_cast<int>(std::min(master.samples.size(), slave.samples.size()));
    const int lag_max = max_lag_samples;
    if (n <= 2 * lag_max) {
        throw InsufficientOverlapError("need more than " + std::to_string(2 * lag_max) +
                                       " overlapping samples, have " + std::to_string(n));
    }

    auto zero_meaned = [](const std::vector<double>& v, int count) {
        double mean = 0.0;
        for (int i = 0; i < count; ++i) mean += v[static_cast<std::size_t>(i)];
        mean /= count;
        std::vector<double> out(static_cast<std::size_t>(count));
        double lo = v[0], hi = v[0];
        for (int i = 0; i < count; ++i) {
            out[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)] - mean;
            lo = std::min(lo, v[static_cast<std::size_t>(i)]);
            hi = std::max(hi, v[static_cast<std::size_t>(i)]);
        }
        if (lo == hi) throw FlatTraceError();
        return out;
    };
    const std::vector<double> m = zero_meaned(master.samples, n);
    const std::vector<double> s = zero_meaned(slave.samples, n);

    // Fixed summation window [lag_max, n): every lag correlates the same
    // slave samples, so no per-lag normalization is needed and the argmax
    // carries no short-overlap bias.
    std::vector<double> corr(static_cast<std::size_t>(lag_max) + 1, 0.0);
    for (int k = 0; k <= lag_max; ++k) {
        double acc = 0.0;
        for (int i = lag_max; i < n; ++i) {
            acc += s[static_cast<std::size_t>(i)] * m[static_cast<std::size_t>(i - k)];
        }
        corr[static_cast<std::size_t>(k)] = acc;
    }

    int best = 0;
    for (int k = 1; k <= lag_max; ++k) {
        if (corr[static_cast<std::size_t>(k)] > corr[static_cast<std::size_t>(best)]) best = k;
    }

    double refined = static_cast<double>(best);
    if (best > 0 && best < lag_max) {
        const double a = corr[static_cast<std::size_t>(best) - 1];
        const double b = corr[static_cast<std::size_t>(best)];
        const double c = corr[static_cast<std::size_t>(best) + 1];
        const double denom = a - 2.0 * b + c;
        if (denom != 0.0) {
            refined += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
        }
    }

    DelayEstimate est;
    est.peak_lag_samples = best;
    est.peak_value = corr[static_cast<std::size_t>(best)];
    const double period_ms = static_cast<double>(master.period_us) / 1000.0;
    est.delay_ms = refined * period_ms + static_cast<double>(t0_offset_us) / 1000.0;

    // Normalized peak: 1.0 means the windows match perfectly at the lag.
    double em = 0.0, es = 0.0;
    for (int i = lag_max; i < n; ++i) {
        es += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)];
        em += m[static_cast<std::size_t>(i - best)] * m[static_cast<std::size_t>(i - best)];
    }
    est.peak_corr = (em > 0.0 && es > 0.0) ? est.peak_value / std::sqrt(em * es) : 0.0;

    // Peak isolation: best correlation beyond the main lobe (where the
    // curve first drops below half the peak on each side).
    double side = 0.0;
    bool have_side = false;
    const double half = 0.5 * est.peak_value;
    for (int dir : {-1, 1}) {
        int k = best;
        while (k + dir >= 0 && k + dir <= lag_max &&
               corr[static_cast<std::size_t>(k)] >= half) {
            k += dir;
        }
        for (; k >= 0 && k <= lag_max; k += dir) {
            side = have_side ? std::max(side, corr[static_cast<std::size_t>(k)])
                             : corr[static_cast<std::size_t>(k)];
            have_side = true;
        }
    }
    est.peak_ratio = (have_side && side > 0.0) ? est.peak_value / side
                                               : std::numeric_limits<double>::infinity();
    return est;
}

inline double estimate_delay(const GyroTrace& master, const GyroTrace& slave,
                             int max_lag_samples = 200) {
    return estimate_delay_full(master, slave, max_lag_samples).delay_ms;
}

// ---------------------------------------------------------------------------
// Stage-boundary timestamping

enum class Stage : int {
    Generated = 0,
    Captured = 1,
    Filtered = 2,
    RoiComputed = 3,
    RoiSent = 4,
    RoiReceived = 5,
    CommandPublished = 6,
    PlantApplied = 7,
};

inline constexpr int kStageCount = 8;

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Generated: return "generated";
        case Stage::Captured: return "captured";
        case Stage::Filtered: return "filtered";
        case Stage::RoiComputed: return "roi_computed";
        case Stage::RoiSent: return "roi_sent";
        case Stage::RoiReceived: return "roi_received";
        case Stage::CommandPublished: return "command_published";
        case Stage::PlantApplied: return "plant_applied";
    }
    return "?";
}

struct StageStamp {
    std::uint64_t item_id = 0;
    Stage stage = Stage::Generated;
    std::int64_t ts_us = 0;
};

/// Append-only stamp collector; any pipeline task may record.
class StampLog {
  public:
    void record(std::uint64_t item_id, Stage stage, std::int64_t ts_us) {
        std::lock_guard<std::mutex> lock(mutex_);
        stamps_.push_back({item_id, stage, ts_us});
    }

    std::vector<StageStamp> snapshot() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return stamps_;
    }

  private:
    mutable std::mutex mutex_;
    std::vector<StageStamp> stamps_;
};

struct StagePairStats {
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p99_ms = 0.0;
};

struct LatencyReport {
    // Adjacent stage pairs in pipeline order, index i = stage i -> i+1.
    std::array<StagePairStats, kStageCount - 1> per_stage{};
    StagePairStats total;            // generated -> plant_applied
    double total_stamps_ms = 0.0;    // mean of the total pair
    double total_xcorr_ms = std::numeric_limits<double>::quiet_NaN();
    std::size_t items_complete = 0;
    std::size_t items_dropped = 0;   // items missing at least one stage
};

namespace detail {

inline StagePairStats summarize_ms(std::vector<double>& deltas_ms) {
    StagePairStats stats;
    if (deltas_ms.empty()) return stats;
    double sum = 0.0;
    for (double d : deltas_ms) sum += d;
    stats.mean_ms = sum / static_cast<double>(deltas_ms.size());
    std::sort(deltas_ms.begin(), deltas_ms.end());
    auto rank = [&](double q) {
        const std::size_t idx =
            static_cast<std::size_t>(std::ceil(q * static_cast<double>(deltas_ms.size())));
        return deltas_ms[std::min(deltas_ms.size() - 1, idx == 0 ? 0 : idx - 1)];
    };
    stats.p50_ms = rank(0.50);
    stats.p99_ms = rank(0.99);
    return stats;
}

}  // namespace detail

/// Aggregates stage deltas per item. Items missing any stage are
/// excluded from every statistic and counted as dropped.
inline LatencyReport build_report(const std::vector<StageStamp>& stamps,
                                  const GyroTrace* master = nullptr,
                                  const GyroTrace* slave = nullptr) {
    std::map<std::uint64_t, std::array<std::optional<std::int64_t>, kStageCount>> items;
    for (const StageStamp& s : stamps) {
        items[s.item_id][static_cast<std::size_t>(s.stage)] = s.ts_us;
    }
    if (items.size() < 100) {
        throw InsufficientOverlapError("latency report needs stamps for >= 100 items, have " +
                                       std::to_string(items.size()));
    }

    LatencyReport report;
    std::array<std::vector<double>, kStageCount - 1> deltas;
    std::vector<double> totals;
    for (const auto& [id, stages] : items) {
        const bool complete =
            std::all_of(stages.begin(), stages.end(), [](const auto& s) { return s.has_value(); });
        if (!complete) {
            ++report.items_dropped;
            continue;
        }
        for (int i = 0; i + 1 < kStageCount; ++i) {
            const std::int64_t d = *stages[static_cast<std::size_t>(i) + 1] -
                                   *stages[static_cast<std::size_t>(i)];
            if (d < 0) {
                throw std::logic_error("stage timestamps decrease for item " + std::to_string(id) +
                                       " at " + stage_name(static_cast<Stage>(i + 1)));
            }
            deltas[static_cast<std::size_t>(i)].push_back(static_cast<double>(d) / 1000.0);
        }
        totals.push_back(static_cast<double>(*stages[kStageCount - 1] - *stages[0]) / 1000.0);
        ++report.items_complete;
    }
    for (int i = 0; i + 1 < kStageCount; ++i) {
        report.per_stage[static_cast<std::size_t>(i)] =
            detail::summarize_ms(deltas[static_cast<std::size_t>(i)]);
    }
    report.total = detail::summarize_ms(totals);
    report.total_stamps_ms = report.total.mean_ms;
    if (master && slave) {
        report.total_xcorr_ms = estimate_delay(*master, *slave);
    }
    return report;
}

inline const char* stage_pair_label(int i) {
    switch (i) {
        case 0: return "capture events";
        case 1: return "1st udp link";
        case 2: return "event data processing";
        case 3: return "roi handoff";
        case 4: return "2nd udp link";
        case 5: return "generate command";
        case 6: return "actuation (3rd link + robot)";
    }
    return "?";
}

inline std::string render_report_text(const LatencyReport& r) {
    std::string out;
    char line[160];
    out += "latency decomposition\n";
    out += "---------------------------------------------------------------------\n";
    std::snprintf(line, sizeof line, "%-30s %10s %10s %10s\n", "stage pair", "mean_ms", "p50_ms",
                  "p99_ms");
    out += line;
    for (int i = 0; i + 1 < kStageCount; ++i) {
        const StagePairStats& s = r.per_stage[static_cast<std::size_t>(i)];
        std::snprintf(line, sizeof line, "%-30s %10.3f %10.3f %10.3f\n", stage_pair_label(i),
                      s.mean_ms, s.p50_ms, s.p99_ms);
        out += line;
    }
    out += "---------------------------------------------------------------------\n";
    std::snprintf(line, sizeof line, "total, stage stamps            %10.3f ms (mean generated->plant_applied)\n",
                  r.total_stamps_ms);
    out += line;
    if (std::isnan(r.total_xcorr_ms)) {
        out += "total, gyro cross-correlation         n/a\n";
    } else {
        std::snprintf(line, sizeof line, "total, gyro cross-correlation  %10.3f ms\n",
                      r.total_xcorr_ms);
        out += line;
    }
    std::snprintf(line, sizeof line, "items: %zu complete, %zu dropped\n", r.items_complete,
                  r.items_dropped);
    out += line;
    return out;
}

inline std::string render_report_csv(const LatencyReport& r) {
    std::string out = "stage_pair,mean_ms,p50_ms,p99_ms\n";
    char line[160];
    for (int i = 0; i + 1 < kStageCount; ++i) {
        const StagePairStats& s = r.per_stage[static_cast<std::size_t>(i)];
        std::snprintf(line, sizeof line, "%s->%s,%.3f,%.3f,%.3f\n",
                      stage_name(static_cast<Stage>(i)), stage_name(static_cast<Stage>(i + 1)),
                      s.mean_ms, s.p50_ms, s.p99_ms);
        out += line;
    }
    std::snprintf(line, sizeof line, "generated->plant_applied,%.3f,%.3f,%.3f\n", r.total.mean_ms,
                  r.total.p50_ms, r.total.p99_ms);
    out += line;
    if (!std::isnan(r.total_xcorr_ms)) {
        std::snprintf(line, sizeof line, "gyro_xcorr,%.3f,%.3f,%.3f\n", r.total_xcorr_ms,
                      r.total_xcorr_ms, r.total_xcorr_ms);
        out += line;
    }
    return out;
}

}  // namespace evlat
