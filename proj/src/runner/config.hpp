#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "forecast/model.hpp"
#include "forecast/train.hpp"
#include "netsim/netsim.hpp"
#include "orchestrator/orchestrator.hpp"
#include "pipeline/pipeline.hpp"
#include "rlapps/apps.hpp"
#include "traffic/traffic.hpp"

namespace ranopt::runner {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kEnvPrefix = "RANOPT__";

enum class Mode { Proposed, AlwaysSteering, AlwaysSleeping, NoApp };
std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct StationTemplate {
    double bandwidth_mhz = 20.0;
    double carrier_ghz = 3.5;
    double max_tx_dbm = 43.0;
    netsim::PowerModel power{};
};

struct ScenarioConfig {
    int num_ues = 60;
    double ue_radius_m = 500.0;
    double small_offset_m = 250.0;
    std::vector<traffic::TrafficClass> flow_classes{traffic::TrafficClass::Video, traffic::TrafficClass::Gaming,
                                                    traffic::TrafficClass::Voice};
    std::array<traffic::TrafficClassSpec, traffic::kNumClasses> traffic_table = traffic::default_traffic_table();
    double peak_mbps = 298.0;
    double trough_mbps = 116.0;
    double trough_time_s = 4.0 * 3600.0;
    double time_warp = 1.0;
    double noise_sigma = 0.03;
    double noise_knot_s = 3600.0;
    StationTemplate macro{10.0, 0.8, 38.0, {130.0, 4.7, 75.0}};
    StationTemplate small{20.0, 3.5, 43.0, {56.0, 2.6, 6.0}};
    netsim::RadioConfig radio{};
    netsim::NetworkOptions network{};
};

struct ForecasterConfig {
    forecast::ModelConfig model{};
    forecast::TrainConfig train = [] {
        forecast::TrainConfig t;
        t.max_samples_per_epoch = 4096;
        return t;
    }();
    double train_fraction = 0.8;
};

struct RlConfig {
    rlapps::SteeringConfig steering{};
    // epoch_frames 0: one minute of profile time (60 frames at warp 1)
    rlapps::SleepingConfig sleeping = [] {
        rlapps::SleepingConfig s;
        s.epoch_frames = 0;
        return s;
    }();
    double train_time_warp = 60.0;
    int steering_days = 3;
    int sleeping_days = 20;
};

struct OrchestratorConfig {
    orchestrator::Thresholds thresholds{};
    int lead_frames = 1;
    orchestrator::AdjustPolicy adjustment{};
    std::vector<orchestrator::MetricScale> metrics = orchestrator::default_metrics();
};

struct EvalConfig {
    std::vector<double> sweep_volumes{120.0, 140.0, 190.0, 220.0, 300.0};
    double sweep_segment_s = 600.0;
    double sweep_warmup_s = 30.0;
    double bin_mbps = 20.0;
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    Mode mode = Mode::Proposed;
    std::uint64_t seed = 1;
    double duration_s = 86400.0;
    ScenarioConfig scenario{};
    pipeline::SgFilterConfig smoothing{};
    ForecasterConfig forecaster{};
    RlConfig rl{};
    OrchestratorConfig orchestrator{};
    EvalConfig eval{};

    /// Cross-field checks; throws Error("config", ...).
    void validate() const;

    double frame_s() const { return scenario.network.frame_ms * 1e-3; }
    /// Frames in one profile day at warp w.
    std::int64_t frames_per_day(double warp) const;
    std::int64_t frames_per_day() const { return frames_per_day(scenario.time_warp); }
    std::int64_t duration_frames() const;
    int sleep_epoch_frames(double warp) const;
};

nlohmann::json to_json(const RunConfig& c);
/// Strict: unknown keys, wrong types or a schema mismatch throw Error("config", ...).
RunConfig from_json(const nlohmann::json& j);

/// Deep merge: objects merge key by key, everything else (arrays included) replaces.
void merge(nlohmann::json& base, const nlohmann::json& overlay);

/// JSON with comments. Throws on I/O or syntax errors.
nlohmann::json read_jsonc(const std::string& path);

/// Sets a value at a dotted path ("rl.steering.dqn.alpha"); the text is parsed
/// as JSON when possible, otherwise taken as a string.
void set_path(nlohmann::json& j, const std::string& dotted, const std::string& value_text);

/// Applies RANOPT__section__key=value environment entries (double underscore
/// separates path components). Returns the applied keys.
std::vector<std::string> apply_env(nlohmann::json& j, char** envp);

/// Defaults, then each file in order, then the environment.
RunConfig load(const std::vector<std::string>& files, char** envp);

/// Hash of the canonical JSON dump.
std::string config_hash(const RunConfig& c);
/// Hash of scenario, seed and duration only: runs with equal ids face the same traffic and network.
std::string scenario_id(const RunConfig& c);

} // namespace ranopt::runner
