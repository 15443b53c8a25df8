#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ranopt::evalkit {

struct ResidualSeries {
    std::string source;
    std::vector<double> e;
};

/// e_t = y_t - yhat_t. Throws on a length mismatch.
ResidualSeries residuals(std::span<const double> y, std::span<const double> yhat, std::string source = "model");

struct ResidualStats {
    std::string source;
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0; // population standard deviation
    double mae = 0.0;
    double rmse = 0.0;
};

ResidualStats residual_stats(const ResidualSeries& r);

/// One row of a run's KPI CSV.
struct KpiRow {
    std::int64_t frame = 0;
    double throughput_mbps = 0.0;
    double latency_ms[3] = {0.0, 0.0, 0.0};
    double drop_rate = 0.0;
    double power_w = 0.0;
    double ee = 0.0;
};

inline const std::vector<std::string>& kpi_columns() {
    static const std::vector<std::string> c{"frame",           "throughput_mbps", "latency_ms_video", "latency_ms_gaming",
                                            "latency_ms_voice", "drop_rate",      "power_w",          "ee_mbits_per_joule"};
    return c;
}

std::vector<KpiRow> read_kpi_csv(const std::string& path);

struct ModeAggregate {
    std::string mode;
    std::size_t frames = 0;
    double mean_throughput_mbps = 0.0;
    double mean_ee = 0.0;
    double mean_drop_rate = 0.0;
    double mean_power_w = 0.0;
};

ModeAggregate aggregate(const std::string& mode, std::span<const KpiRow> rows);

/// A finished evaluation run as exported on disk.
struct RunData {
    std::string mode;
    std::string scenario_id; // hash of scenario, seed and duration
    std::uint64_t seed = 0;
    std::vector<KpiRow> kpi;
    std::vector<double> volume_mbps; // offered volume per frame
};

struct Delta {
    std::string name;
    std::string mode;
    std::string reference;
    std::string metric;
    double value = 0.0; // relative change (mode - reference) / reference
};

struct VolumeBin {
    double lo = 0.0, hi = 0.0;
    std::string mode;
    std::size_t frames = 0;
    double mean_throughput_mbps = 0.0;
    double mean_ee = 0.0;
    double mean_drop_rate = 0.0;
};

struct ComparisonReport {
    std::vector<ModeAggregate> modes;
    std::vector<ResidualStats> residuals;
    std::vector<Delta> deltas;
    std::vector<VolumeBin> bins;
};

double relative_delta(double value, double reference);

/// Aggregates every run and computes relative deltas: each mode against the
/// first run, plus the headline pairs (proposed vs always_steering EE,
/// proposed vs always_sleeping throughput) when present. Runs must share the
/// scenario id, seed and frame count.
ComparisonReport compare_modes(const std::vector<RunData>& runs, double bin_mbps = 20.0);

/// Frames binned by offered volume into [k*w, (k+1)*w).
std::vector<VolumeBin> volume_bins(const RunData& run, double bin_mbps);

nlohmann::json to_json(const ComparisonReport& r);
std::string to_text(const ComparisonReport& r);
void write_report(const std::string& dir, const ComparisonReport& r);

struct SweepRow {
    double volume_mbps = 0.0;
    double offered_mbps = 0.0;    // measured offered load of the segment
    double ee = 0.0;              // with the sleeping rApp active
    double drop_rate = 0.0;
    double throughput_mbps = 0.0;
    double ee_awake = 0.0;        // same segment, every cell awake
    double drop_rate_awake = 0.0;
    double mean_sleeping = 0.0;   // mean number of sleeping cells
    bool flagged = false;         // target volume could not be generated
};

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(const std::string& path);

} // namespace ranopt::evalkit
