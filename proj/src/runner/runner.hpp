#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "evalkit/evalkit.hpp"
#include "runner/config.hpp"

namespace ranopt::runner {

/// Stream tags for derive_seed.
enum SeedTag : std::uint64_t {
    kUePlacement = 0x11,
    kTrafficDay = 0x22,
    kTrainDay = 0x33,
    kSweep = 0x44,
    kSteeringAgent = 0x55,
    kSleepingAgent = 0x66,
    kForecaster = 0x77,
};

/// Traffic generator plus network for one simulated day. The network keeps
/// pointers into the generator's class table, so both live together.
struct Scenario {
    std::unique_ptr<traffic::TrafficGenerator> traffic;
    std::unique_ptr<netsim::Network> net;
    double warp = 1.0;
    std::int64_t frame_ns = 0;

    /// Profile time of day at the middle of frame f.
    double time_of_day(std::int64_t f) const;
    std::vector<std::int64_t> demand(std::int64_t f) { return traffic->generate_frame_demand(f * frame_ns, frame_ns); }
};

Scenario build_scenario(const RunConfig& cfg, std::uint64_t traffic_seed, double warp);

/// Offered volume of one simulated frame through the aggregation pipeline, Mbps.
double frame_volume(const RunConfig& cfg, const netsim::FrameResult& res);

const char* version();

using LogFn = std::function<void(const std::string&)>;
void set_logger(LogFn fn);

/// Step 1: one NoApp training day; writes the raw and smoothed volume series.
void stage_simulate(const RunConfig& cfg, const std::string& out_dir);
/// Steps 2-3: trains the forecaster on the smoothed training series.
void stage_train_forecaster(const RunConfig& cfg, const std::string& sim_dir, const std::string& out_dir);
/// Offline DQN training of the apps the mode needs (both when `all`).
void stage_train_apps(const RunConfig& cfg, const std::string& out_dir, bool all = false);
/// Steps 4-5: evaluation day under cfg.mode.
void stage_evaluate(const RunConfig& cfg, const std::string& sim_dir, const std::string& model_dir,
                    const std::string& apps_dir, const std::string& out_dir);
/// Fixed-volume segments with and without the sleeping rApp.
std::vector<evalkit::SweepRow> stage_sweep(const RunConfig& cfg, const std::string& apps_dir, const std::string& out_dir);
/// Report over evaluation directories (one per mode).
evalkit::ComparisonReport stage_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir, double bin_mbps = 20.0);
/// Prediction + orchestration over a recorded series, no network simulation.
void stage_replay(const RunConfig& cfg, const std::string& series_csv, const std::string& model_dir, const std::string& out_dir);
/// All stages under one directory: simulate/, forecaster/, apps/, evaluate/.
void stage_run(const RunConfig& cfg, const std::string& out_dir);

/// FNV-1a of a file's bytes, hex.
std::string file_hash(const std::string& path);

/// Causal smoothing of the most recent values: Savitzky-Golay with
/// polynomial-fit edges over the last `length + window` samples; returns the
/// last `length` smoothed values.
std::vector<double> causal_smooth_tail(const std::vector<double>& history, std::size_t length,
                                       const pipeline::SgFilterConfig& sg);

} // namespace ranopt::runner
