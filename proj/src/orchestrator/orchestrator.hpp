#pragma once

#include <cstdint>
#include <deque>
#include <set>
#include <string>
#include <vector>

#include "netsim/netsim.hpp"

namespace ranopt::orchestrator {

enum class Decision { Idle, ActivateSteering, ActivateSleeping };
std::string to_string(Decision d);
Decision decision_from_string(const std::string& s);

struct Thresholds {
    double th_p = 220.0;
    double th_t = 140.0;
    void validate() const;
};

/// Strict comparisons: equality with either threshold is Idle.
Decision decide(double predicted_mbps, const Thresholds& th);

enum class AppKind { XApp, RApp };

struct AppDescriptor {
    std::string id;
    AppKind kind = AppKind::XApp;
    std::set<std::string> improves;
    bool capable = true; // may be activated
};

/// Registered apps. Activation of an app without the capability flag is refused.
class AppRegistry {
public:
    void add(AppDescriptor d);
    const AppDescriptor& get(const std::string& id) const;
    const std::vector<AppDescriptor>& all() const { return apps_; }
    /// Throws unless non-empty with at least one capable app.
    void validate() const;

private:
    std::vector<AppDescriptor> apps_;
};

inline const char* kSteeringId = "steering_xapp";
inline const char* kSleepingId = "sleeping_rapp";

AppRegistry default_registry();

struct AppState {
    int S = 0;
    int V = 0;
};

/// What changed when the clock advanced into a frame.
struct Transitions {
    bool steering_on = false, steering_off = false;
    bool sleeping_on = false, sleeping_off = false;
};

struct DecisionRecord {
    std::int64_t frame = 0;
    double predicted_mbps = 0.0;
    double th_p = 0.0, th_t = 0.0;
    Decision decision = Decision::Idle;
    int S = 0, V = 0; // in effect during this frame
};

/// Frame-clocked activation controller. A decision taken at frame f
/// terminates conflicting apps from frame f+1 and activates its own app
/// from frame f+lead. Later decisions cancel pending activations they
/// disagree with.
class Orchestrator {
public:
    Orchestrator(Thresholds th, int lead_frames = 1, AppRegistry registry = default_registry());

    const Thresholds& thresholds() const { return th_; }
    void set_thresholds(const Thresholds& th);
    int lead() const { return lead_; }
    AppState state() const { return st_; }

    /// Moves the clock to `frame` (must be the next frame) and applies
    /// terminations and activations that fall due.
    Transitions advance(std::int64_t frame);
    /// Records the decision for the prediction made during the current frame.
    Decision submit(double predicted_mbps);
    /// Explicit request; asking for both apps at once throws ConstraintViolation.
    void request(bool steering, bool sleeping);

    const std::vector<DecisionRecord>& log() const { return log_; }

private:
    struct Pending {
        std::int64_t frame;
        Decision d;
    };
    void schedule(Decision d);

    Thresholds th_;
    int lead_;
    AppRegistry registry_;
    AppState st_{};
    AppState next_{}; // state after pending terminations
    std::deque<Pending> pending_;
    std::int64_t frame_ = -1;
    std::vector<DecisionRecord> log_;
};

/// Offline replay of the activation rule on a standalone state:
/// terminate the other app, then activate this one. Idle terminates both.
AppState apply(AppState s, Decision d);

struct AdjustPolicy {
    bool enabled = false;
    double delta = 5.0;
    std::int64_t window_frames = 3600;
    double drop_target = 0.05;   // mean drop rate allowed while steering
    double ee_target = 0.3;      // Mbit/J expected while idle
    double margin = 10.0;        // th_t <= th_p - margin after every adjustment
    void validate() const;
};

struct FeedbackSample {
    netsim::KpiRecord kpi;
    int S = 0, V = 0;
};

/// Hysteresis rule over one feedback window. Throws on an empty window.
Thresholds adjust_thresholds(const Thresholds& th, const std::vector<FeedbackSample>& window, const AdjustPolicy& p);

struct MetricScale {
    std::string name;
    double scale = 1.0;
};

/// Metric value by name: throughput_mbps, energy_efficiency, drop_rate, power_w,
/// latency_ms_video, latency_ms_gaming, latency_ms_voice. Unknown names throw.
double metric_value(const netsim::KpiRecord& k, const std::string& name);

/// Sum over metrics of (after - before) / scale.
double objective_delta(const netsim::KpiRecord& before, const netsim::KpiRecord& after,
                       const std::vector<MetricScale>& metrics);

std::vector<MetricScale> default_metrics();

void write_decision_log(const std::string& path, const std::vector<DecisionRecord>& log);
std::vector<DecisionRecord> read_decision_log(const std::string& path);

struct AuditResult {
    std::int64_t frames = 0;
    std::int64_t violations = 0;
    std::vector<std::string> messages; // first few violations
};

/// Post-hoc check of a decision log: S+V <= 1 on every frame, every decision
/// equals decide(T_p, th) and every frame's S/V follows from the decisions
/// logged `lead` frames earlier under the cancellation rule.
AuditResult audit_log(const std::vector<DecisionRecord>& log, int lead);

} // namespace ranopt::orchestrator
