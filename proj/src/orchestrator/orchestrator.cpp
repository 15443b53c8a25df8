#include "orchestrator/orchestrator.hpp"

#include <algorithm>
#include <cmath>

#include "common/csv.hpp"
#include "common/error.hpp"

namespace ranopt::orchestrator {

std::string to_string(Decision d) {
    switch (d) {
    case Decision::Idle: return "Idle";
    case Decision::ActivateSteering: return "ActivateSteering";
    case Decision::ActivateSleeping: return "ActivateSleeping";
    }
    return "?";
}

Decision decision_from_string(const std::string& s) {
    if (s == "Idle") return Decision::Idle;
    if (s == "ActivateSteering") return Decision::ActivateSteering;
    if (s == "ActivateSleeping") return Decision::ActivateSleeping;
    throw Error("orchestrator", "unknown decision '" + s + "'");
}

void Thresholds::validate() const {
    if (!std::isfinite(th_p) || !std::isfinite(th_t)) throw Error("orchestrator", "thresholds must be finite");
    if (!(th_t < th_p)) throw Error("orchestrator", "th_t must be below th_p");
}

Decision decide(double tp, const Thresholds& th) {
    if (!std::isfinite(tp)) throw Error("orchestrator", "predicted traffic is not finite");
    if (tp > th.th_p) return Decision::ActivateSteering;
    if (tp < th.th_t) return Decision::ActivateSleeping;
    return Decision::Idle;
}

void AppRegistry::add(AppDescriptor d) {
    for (const auto& a : apps_)
        if (a.id == d.id) throw Error("orchestrator", "app " + d.id + " registered twice");
    apps_.push_back(std::move(d));
}

const AppDescriptor& AppRegistry::get(const std::string& id) const {
    for (const auto& a : apps_)
        if (a.id == id) return a;
    throw Error("orchestrator", "app " + id + " is not registered");
}

void AppRegistry::validate() const {
    if (apps_.empty()) throw Error("orchestrator", "app registry is empty");
    if (std::none_of(apps_.begin(), apps_.end(), [](const AppDescriptor& a) { return a.capable; }))
        throw Error("orchestrator", "no registered app has the activation capability");
}

AppRegistry default_registry() {
    AppRegistry r;
    r.add({kSteeringId, AppKind::XApp, {"throughput_mbps", "latency_ms_video", "latency_ms_gaming", "latency_ms_voice"}, true});
    r.add({kSleepingId, AppKind::RApp, {"energy_efficiency"}, true});
    return r;
}

AppState apply(AppState s, Decision d) {
    switch (d) {
    case Decision::Idle: return {0, 0};
    case Decision::ActivateSteering: return {1, 0};
    case Decision::ActivateSleeping: return {0, 1};
    }
    return s;
}

Orchestrator::Orchestrator(Thresholds th, int lead_frames, AppRegistry registry)
    : th_(th), lead_(lead_frames), registry_(std::move(registry)) {
    th_.validate();
    registry_.validate();
    if (lead_ < 1) throw Error("orchestrator", "lead time must be at least one frame");
}

void Orchestrator::set_thresholds(const Thresholds& th) {
    th.validate();
    th_ = th;
}

void Orchestrator::request(bool steering, bool sleeping) {
    if (steering && sleeping)
        throw ConstraintViolation("orchestrator", "steering xApp and sleeping rApp requested together (S + V would exceed 1)");
    schedule(steering ? Decision::ActivateSteering : sleeping ? Decision::ActivateSleeping : Decision::Idle);
}

void Orchestrator::schedule(Decision d) {
    if (frame_ < 0) throw Error("orchestrator", "advance() must be called before the first decision");
    if (d == Decision::ActivateSteering && !registry_.get(kSteeringId).capable)
        throw ConstraintViolation("orchestrator", std::string(kSteeringId) + " lacks the activation capability");
    if (d == Decision::ActivateSleeping && !registry_.get(kSleepingId).capable)
        throw ConstraintViolation("orchestrator", std::string(kSleepingId) + " lacks the activation capability");
    // Terminations take effect from the next frame.
    if (d != Decision::ActivateSteering) next_.S = 0;
    if (d != Decision::ActivateSleeping) next_.V = 0;
    std::erase_if(pending_, [d](const Pending& p) { return p.d != d; });
    if (d != Decision::Idle) pending_.push_back({frame_ + lead_, d});
}

Transitions Orchestrator::advance(std::int64_t frame) {
    if (frame != frame_ + 1 && frame_ >= 0) throw Error("orchestrator", "frames must advance one at a time");
    const AppState old = st_;
    frame_ = frame;
    st_ = next_;
    while (!pending_.empty() && pending_.front().frame <= frame) {
        if (pending_.front().d == Decision::ActivateSteering) st_.S = 1;
        else st_.V = 1;
        pending_.pop_front();
    }
    if (st_.S + st_.V > 1) throw ConstraintViolation("orchestrator", "S + V > 1 at frame " + std::to_string(frame));
    next_ = st_;
    Transitions t;
    t.steering_on = !old.S && st_.S;
    t.steering_off = old.S && !st_.S;
    t.sleeping_on = !old.V && st_.V;
    t.sleeping_off = old.V && !st_.V;
    return t;
}

Decision Orchestrator::submit(double tp) {
    if (!log_.empty() && log_.back().frame == frame_) throw Error("orchestrator", "one decision per frame");
    const Decision d = decide(tp, th_);
    log_.push_back({frame_, tp, th_.th_p, th_.th_t, d, st_.S, st_.V});
    schedule(d);
    return d;
}

void AdjustPolicy::validate() const {
    if (!(delta >= 0.0)) throw Error("orchestrator", "adjustment delta must be >= 0");
    if (window_frames < 1) throw Error("orchestrator", "adjustment window must be >= 1 frame");
    if (!(margin > 0.0)) throw Error("orchestrator", "adjustment margin must be positive");
}

Thresholds adjust_thresholds(const Thresholds& th, const std::vector<FeedbackSample>& window, const AdjustPolicy& p) {
    if (window.empty()) throw Error("orchestrator", "threshold adjustment needs a non-empty feedback window");
    double drop = 0.0, ee = 0.0;
    int ns = 0, ni = 0;
    for (const auto& s : window) {
        if (s.S) {
            drop += s.kpi.drop_rate;
            ++ns;
        } else if (!s.V) {
            ee += s.kpi.energy_efficiency;
            ++ni;
        }
    }
    Thresholds out = th;
    if (ns > 0 && drop / ns > p.drop_target) out.th_p -= p.delta;
    if (ni > 0 && ee / ni < p.ee_target) out.th_t += p.delta;
    if (out.th_t > out.th_p - p.margin) {
        // keep whichever threshold did not move; otherwise split the difference
        if (out.th_p != th.th_p && out.th_t == th.th_t) out.th_p = out.th_t + p.margin;
        else if (out.th_t != th.th_t && out.th_p == th.th_p) out.th_t = out.th_p - p.margin;
        else out.th_t = out.th_p - p.margin;
    }
    return out;
}

double metric_value(const netsim::KpiRecord& k, const std::string& name) {
    if (name == "throughput_mbps") return k.throughput_mbps;
    if (name == "energy_efficiency") return k.energy_efficiency;
    if (name == "drop_rate") return k.drop_rate;
    if (name == "power_w") return k.power_w;
    if (name == "latency_ms_video") return k.mean_latency_ms[0];
    if (name == "latency_ms_gaming") return k.mean_latency_ms[1];
    if (name == "latency_ms_voice") return k.mean_latency_ms[2];
    throw Error("orchestrator", "unknown metric '" + name + "'");
}

double objective_delta(const netsim::KpiRecord& before, const netsim::KpiRecord& after,
                       const std::vector<MetricScale>& metrics) {
    double s = 0.0;
    for (const auto& m : metrics) {
        if (m.scale == 0.0) throw Error("orchestrator", "metric scale must be non-zero: " + m.name);
        s += (metric_value(after, m.name) - metric_value(before, m.name)) / m.scale;
    }
    return s;
}

std::vector<MetricScale> default_metrics() { return {{"throughput_mbps", 100.0}, {"energy_efficiency", 1.0}}; }

void write_decision_log(const std::string& path, const std::vector<DecisionRecord>& log) {
    csv::Writer w(path);
    w.header({"frame", "T_p", "th_p", "th_t", "decision", "S", "V"});
    for (const auto& r : log)
        w.row({std::to_string(r.frame), csv::fmt(r.predicted_mbps), csv::fmt(r.th_p), csv::fmt(r.th_t), to_string(r.decision),
               std::to_string(r.S), std::to_string(r.V)});
}

std::vector<DecisionRecord> read_decision_log(const std::string& path) {
    const auto t = csv::read(path);
    const auto cf = t.col("frame"), cp = t.col("T_p"), ch = t.col("th_p"), ct = t.col("th_t"), cd = t.col("decision"),
               cs = t.col("S"), cv = t.col("V");
    std::vector<DecisionRecord> out;
    try {
        for (const auto& r : t.rows) {
            DecisionRecord d;
            d.frame = std::stoll(r.at(cf));
            d.predicted_mbps = std::stod(r.at(cp));
            d.th_p = std::stod(r.at(ch));
            d.th_t = std::stod(r.at(ct));
            d.decision = decision_from_string(r.at(cd));
            d.S = std::stoi(r.at(cs));
            d.V = std::stoi(r.at(cv));
            out.push_back(d);
        }
    } catch (const std::logic_error& e) {
        throw Error("orchestrator", "malformed decision log " + path + ": " + e.what());
    }
    return out;
}

AuditResult audit_log(const std::vector<DecisionRecord>& log, int lead) {
    AuditResult a;
    a.frames = static_cast<std::int64_t>(log.size());
    auto flag = [&](std::int64_t frame, const std::string& m) {
        ++a.violations;
        if (a.messages.size() < 10) a.messages.push_back("frame " + std::to_string(frame) + ": " + m);
    };
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& r = log[i];
        if (i > 0 && r.frame != log[i - 1].frame + 1) flag(r.frame, "frames are not contiguous");
        if (r.S < 0 || r.S > 1 || r.V < 0 || r.V > 1) flag(r.frame, "S/V outside {0,1}");
        if (r.S + r.V > 1) flag(r.frame, "S + V > 1");
        const Decision expect = std::isfinite(r.predicted_mbps) ? decide(r.predicted_mbps, {r.th_p, r.th_t}) : Decision::Idle;
        if (expect != r.decision) flag(r.frame, "decision disagrees with T_p against the logged thresholds");
        // An app runs at f exactly when the last `lead` decisions all asked for it.
        bool s = i >= static_cast<std::size_t>(lead), v = s;
        for (int k = 1; k <= lead && i >= static_cast<std::size_t>(k); ++k) {
            const auto d = log[i - static_cast<std::size_t>(k)].decision;
            s = s && d == Decision::ActivateSteering;
            v = v && d == Decision::ActivateSleeping;
        }
        if (r.S != static_cast<int>(s)) flag(r.frame, "steering state does not follow the decision " + std::to_string(lead) + " frame(s) earlier");
        if (r.V != static_cast<int>(v)) flag(r.frame, "sleeping state does not follow the decision " + std::to_string(lead) + " frame(s) earlier");
    }
    return a;
}

} // namespace ranopt::orchestrator
