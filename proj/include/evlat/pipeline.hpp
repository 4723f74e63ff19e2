#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "evlat/event.hpp"

namespace evlat {

/// Spatio-temporal correlation filter: an event survives iff the
/// timestamp surface holds an event at its own pixel or one of the 8
/// neighbors within correlation_window_us of it. Processed in stream
/// order the surface only contains the past, so this is the usual
/// "a neighbor fired shortly before" test. Timestamps of all input
/// events are written to the surface whether or not they survive.
class NoiseFilter {
  public:
    explicit NoiseFilter(std::int64_t correlation_window_us = 2000)
        : window_us_(correlation_window_us),
          last_ts_(static_cast<std::size_t>(kSensorWidth) * kSensorHeight, kNever) {}

    EventPacket process(const EventPacket& packet) {
        EventPacket out;
        out.seq = packet.seq;
        for (const Event& e : packet.events) {
            if (correlated(e)) out.events.push_back(e);
            last_ts_[index(e.x, e.y)] = static_cast<std::int64_t>(e.ts);
        }
        return out;
    }

    void reset() { std::fill(last_ts_.begin(), last_ts_.end(), kNever); }

  private:
    static constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::min() / 2;

    static std::size_t index(int x, int y) {
        return static_cast<std::size_t>(y) * kSensorWidth + static_cast<std::size_t>(x);
    }

    bool correlated(const Event& e) const {
        const std::int64_t ts = static_cast<std::int64_t>(e.ts);
        const int x0 = std::max(0, e.x - 1), x1 = std::min(kSensorWidth - 1, e.x + 1);
        const int y0 = std::max(0, e.y - 1), y1 = std::min(kSensorHeight - 1, e.y + 1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const std::int64_t prev = last_ts_[index(x, y)];
                if (std::abs(ts - prev) <= window_us_) return true;
            }
        }
        return false;
    }

    std::int64_t window_us_;
    std::vector<std::int64_t> last_ts_;
};

struct RoiConfig {
    std::int64_t window_us = 10000;   // ROI window: newest events spanning at most this
    std::size_t max_events = 2000;    // ...or at most this many, whichever is hit first
    double activity_factor = 2.0;     // threshold = factor * mean smoothed activity
    int smooth_radius = 2;            // box smoothing radius for the activity histograms
    std::size_t min_support = 50;     // estimates with fewer contributing events are dropped
};

struct BBox {
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0;  // inclusive pixel bounds

    bool contains(double x, double y) const {
        return x >= x0 && x <= x1 + 1 && y >= y0 && y <= y1 + 1;
    }
};

struct RoiEstimate {
    double cx = 0.0;
    double cy = 0.0;
    BBox bbox;
    std::uint32_t ts = 0;       // newest contributing event
    std::size_t support = 0;    // events inside the bbox
};

/// Sliding window over the filtered stream feeding the ROI detector.
class EventWindow {
  public:
    explicit EventWindow(const RoiConfig& cfg) : cfg_(cfg) {}

    void push(const EventPacket& packet) {
        for (const Event& e : packet.events) events_.push_back(e);
        if (events_.empty()) return;
        const std::int64_t newest = static_cast<std::int64_t>(events_.back().ts);
        while (!events_.empty() &&
               newest - static_cast<std::int64_t>(events_.front().ts) > cfg_.window_us) {
            events_.pop_front();
        }
        while (events_.size() > cfg_.max_events) events_.pop_front();
    }

    const std::deque<Event>& events() const { return events_; }

  private:
    RoiConfig cfg_;
    std::deque<Event> events_;
};

namespace detail {

inline std::vector<double> box_smooth(const std::vector<double>& hist, int radius) {
    std::vector<double> out(hist.size(), 0.0);
    const int n = static_cast<int>(hist.size());
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int k = i - radius; k <= i + radius; ++k) {
            if (k >= 0 && k < n) sum += hist[static_cast<std::size_t>(k)];
        }
        out[static_cast<std::size_t>(i)] = sum / (2 * radius + 1);
    }
    return out;
}

/// Span of the activity strictly above the threshold: {first, last}
/// above-threshold bins, inclusive, or nullopt when nothing exceeds it.
/// The span rather than the single largest run: an object lit only at
/// its contrast edges produces a bimodal marginal whose valley never
/// clears the threshold, and a single run would lock onto one edge.
inline std::optional<std::pair<int, int>> active_span_above(const std::vector<double>& activity,
                                                            double threshold) {
    int lo = -1, hi = -1;
    const int n = static_cast<int>(activity.size());
    for (int i = 0; i < n; ++i) {
        if (activity[static_cast<std::size_t>(i)] > threshold) {
            if (lo < 0) lo = i;
            hi = i;
        }
    }
    if (lo < 0) return std::nullopt;
    return std::make_pair(lo, hi);
}

}  // namespace detail

/// Edge-activity ROI: per-axis event-count histograms, box-smoothed,
/// thresholded at activity_factor times the mean; the above-threshold
/// activity span on each axis bounds the box, and the centroid of the
/// events inside it is the center. Absence (sparse or diffuse activity)
/// is a value, not an error.
template <typename EventRange>
std::optional<RoiEstimate> compute_roi(const EventRange& window, const RoiConfig& cfg) {
    std::vector<double> col_activity(kSensorWidth, 0.0);
    std::vector<double> row_activity(kSensorHeight, 0.0);
    std::size_t total = 0;
    for (const Event& e : window) {
        col_activity[e.x] += 1.0;
        row_activity[e.y] += 1.0;
        ++total;
    }
    if (total == 0) return std::nullopt;

    const std::vector<double> cols = detail::box_smooth(col_activity, cfg.smooth_radius);
    const std::vector<double> rows = detail::box_smooth(row_activity, cfg.smooth_radius);
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    const auto x_run = detail::active_span_above(cols, cfg.activity_factor * mean(cols));
    const auto y_run = detail::active_span_above(rows, cfg.activity_factor * mean(rows));
    if (!x_run || !y_run) return std::nullopt;

    RoiEstimate roi;
    roi.bbox = {x_run->first, x_run->second, y_run->first, y_run->second};
    double sx = 0.0, sy = 0.0;
    for (const Event& e : window) {
        if (e.x >= roi.bbox.x0 && e.x <= roi.bbox.x1 && e.y >= roi.bbox.y0 &&
            e.y <= roi.bbox.y1) {
            sx += e.x;
            sy += e.y;
            roi.ts = std::max(roi.ts, e.ts);
            ++roi.support;
        }
    }
    if (roi.support < cfg.min_support) return std::nullopt;
    roi.cx = sx / static_cast<double>(roi.support);
    roi.cy = sy / static_cast<double>(roi.support);
    return roi;
}

/// Moving-average smoother: output is the mean of the current center and
/// up to two previously seen centers.
class CenterSmoother {
  public:
    std::pair<double, double> smooth(double cx, double cy) {
        double sx = cx, sy = cy;
        for (std::size_t i = 0; i < count_; ++i) {
            sx += history_[i].first;
            sy += history_[i].second;
        }
        const double n = static_cast<double>(count_ + 1);
        push(cx, cy);
        return {sx / n, sy / n};
    }

    void reset() { count_ = 0; }

  private:
    void push(double cx, double cy) {
        history_[next_] = {cx, cy};
        next_ = (next_ + 1) % history_.size();
        count_ = std::min(count_ + 1, history_.size());
    }

    std::array<std::pair<double, double>, 2> history_{};
    std::size_t next_ = 0;
    std::size_t count_ = 0;
};

}  // namespace evlat
