#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace evlat {

inline constexpr double kGyroRateHz = 200.0;
inline constexpr std::int64_t kGyroPeriodUs = 5000;

/// Uniformly sampled angular-velocity signal (deg/s) about the axis
/// aligned with the actuated joint. Sample k sits at t0_us + k * period_us.
struct GyroTrace {
    std::int64_t t0_us = 0;
    std::int64_t period_us = kGyroPeriodUs;
    std::vector<double> samples;

    double rate_hz() const { return 1e6 / static_cast<double>(period_us); }
};

inline void add_gyro_noise(GyroTrace& trace, double sigma_dps, std::uint64_t seed) {
    if (sigma_dps <= 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma_dps);
    for (double& s : trace.samples) s += noise(rng);
}

inline void write_gyro_csv(const std::string& path, const GyroTrace& trace) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "ts_us,omega_z\n";
    char line[64];
    for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        const std::int64_t ts = trace.t0_us + static_cast<std::int64_t>(k) * trace.period_us;
        std::snprintf(line, sizeof line, "%lld,%.6f\n", static_cast<long long>(ts),
                      trace.samples[k]);
        out << line;
    }
}

inline GyroTrace read_gyro_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("ts_us,omega_z", 0) != 0) {
        throw std::runtime_error("bad gyro CSV header in " + path);
    }
    GyroTrace trace;
    trace.period_us = 0;
    std::int64_t prev_ts = 0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        long long ts;
        double omega;
        if (std::sscanf(line.c_str(), "%lld,%lf", &ts, &omega) != 2) {
            throw std::runtime_error("bad gyro CSV row " + std::to_string(row + 2) + " in " + path);
        }
        if (row == 0) {
            trace.t0_us = ts;
        } else if (row == 1) {
            trace.period_us = ts - prev_ts;
            if (trace.period_us <= 0) throw std::runtime_error("non-increasing gyro timestamps");
        } else if (ts - prev_ts != trace.period_us) {
            throw std::runtime_error("non-uniform gyro sampling at row " + std::to_string(row + 2) +
                                     " in " + path);
        }
        prev_ts = ts;
        trace.samples.push_back(omega);
        ++row;
    }
    if (trace.period_us == 0) trace.period_us = kGyroPeriodUs;
    return trace;
}

}  // namespace evlat
