#include <doctest.h>

#include <filesystem>
#include <vector>

#include "common/error.hpp"
#include "orchestrator/orchestrator.hpp"

using namespace ranopt;
using namespace ranopt::orchestrator;

namespace {

const Thresholds kTh{220.0, 140.0};

struct Step {
    AppState s;
    Transitions t;
};

// Feeds one prediction per frame; returns the state in effect during each frame.
std::vector<Step> trace(Orchestrator& o, const std::vector<double>& preds) {
    std::vector<Step> out;
    for (std::size_t f = 0; f < preds.size(); ++f) {
        auto t = o.advance(static_cast<std::int64_t>(f));
        out.push_back({o.state(), t});
        o.submit(preds[f]);
    }
    return out;
}

FeedbackSample sample(int S, int V, double drop, double ee) {
    FeedbackSample s;
    s.S = S;
    s.V = V;
    s.kpi.drop_rate = drop;
    s.kpi.energy_efficiency = ee;
    return s;
}

} // namespace

TEST_CASE("threshold decisions") {
    CHECK(decide(230.0, kTh) == Decision::ActivateSteering);
    CHECK(decide(130.0, kTh) == Decision::ActivateSleeping);
    CHECK(decide(220.0, kTh) == Decision::Idle);
    CHECK(decide(140.0, kTh) == Decision::Idle);
    CHECK(decide(180.0, kTh) == Decision::Idle);
    CHECK_THROWS_AS((Thresholds{140.0, 220.0}.validate()), Error);
    CHECK_THROWS_AS((Thresholds{140.0, 140.0}.validate()), Error);
    for (auto d : {Decision::Idle, Decision::ActivateSteering, Decision::ActivateSleeping})
        CHECK(decision_from_string(to_string(d)) == d);
}

TEST_CASE("standalone activation rule") {
    CHECK(apply({1, 0}, Decision::Idle).S == 0);
    CHECK(apply({1, 0}, Decision::Idle).V == 0);
    auto s = apply({1, 0}, Decision::ActivateSteering);
    CHECK((s.S == 1 && s.V == 0));
    s = apply({1, 0}, Decision::ActivateSleeping);
    CHECK((s.S == 0 && s.V == 1));
    s = apply({0, 1}, Decision::ActivateSteering);
    CHECK((s.S == 1 && s.V == 0));
}

TEST_CASE("lead one: a prediction at f takes effect at f+1") {
    Orchestrator o(kTh, 1);
    auto tr = trace(o, {230, 230, 130, 180, 130});
    // state during frame f follows the prediction made at f-1
    CHECK((tr[0].s.S == 0 && tr[0].s.V == 0));
    CHECK((tr[1].s.S == 1 && tr[1].s.V == 0));
    CHECK(tr[1].t.steering_on);
    CHECK((tr[2].s.S == 1 && tr[2].s.V == 0)); // repeated steering: unchanged
    CHECK_FALSE(tr[2].t.steering_on);
    CHECK((tr[3].s.S == 0 && tr[3].s.V == 1));
    CHECK(tr[3].t.steering_off);
    CHECK(tr[3].t.sleeping_on);
    CHECK((tr[4].s.S == 0 && tr[4].s.V == 0));
    CHECK(tr[4].t.sleeping_off);
    for (const auto& st : tr) CHECK(st.s.S + st.s.V <= 1);
}

TEST_CASE("longer lead terminates at once and activates later") {
    Orchestrator o(kTh, 3);
    auto tr = trace(o, {230, 230, 230, 230, 130, 130, 130, 130, 130});
    CHECK(tr[2].s.S == 0);
    CHECK(tr[3].s.S == 1);
    // sleeping decided at frame 4: steering off from 5, sleeping on from 7
    CHECK(tr[4].s.S == 1);
    CHECK((tr[5].s.S == 0 && tr[5].s.V == 0));
    CHECK((tr[6].s.S == 0 && tr[6].s.V == 0));
    CHECK((tr[7].s.S == 0 && tr[7].s.V == 1));
    for (const auto& st : tr) CHECK(st.s.S + st.s.V <= 1);
}

TEST_CASE("a later disagreeing decision cancels a pending activation") {
    Orchestrator o(kTh, 3);
    auto tr = trace(o, {230, 180, 180, 180, 180});
    for (const auto& st : tr) CHECK(st.s.S == 0);
}

TEST_CASE("requests") {
    Orchestrator o(kTh, 1);
    o.advance(0);
    CHECK_THROWS_AS(o.request(true, true), ConstraintViolation);
    o.request(true, false);
    o.advance(1);
    CHECK(o.state().S == 1);
    CHECK_THROWS_AS(o.advance(5), Error);
}

TEST_CASE("registry capability") {
    AppRegistry r;
    CHECK_THROWS_AS(r.validate(), Error);
    r.add({"x", AppKind::XApp, {"throughput_mbps"}, false});
    CHECK_THROWS_AS(r.validate(), Error);
    r.add({"y", AppKind::RApp, {"energy_efficiency"}, true});
    r.validate();
    CHECK_THROWS_AS(r.get("z"), Error);

    AppRegistry reg;
    reg.add({kSteeringId, AppKind::XApp, {"throughput_mbps"}, false});
    reg.add({kSleepingId, AppKind::RApp, {"energy_efficiency"}, true});
    Orchestrator o(kTh, 1, reg);
    o.advance(0);
    CHECK_THROWS_AS(o.request(true, false), ConstraintViolation);
}

TEST_CASE("threshold adjustment") {
    AdjustPolicy p;
    p.enabled = true;
    std::vector<FeedbackSample> ok{sample(1, 0, 0.01, 0.2), sample(0, 0, 0.0, 0.5), sample(0, 1, 0.3, 0.1)};
    auto t = adjust_thresholds(kTh, ok, p);
    CHECK(t.th_p == 220.0);
    CHECK(t.th_t == 140.0);

    std::vector<FeedbackSample> drops{sample(1, 0, 0.2, 0.2), sample(0, 0, 0.0, 0.5)};
    t = adjust_thresholds(kTh, drops, p);
    CHECK(t.th_p == 215.0);
    CHECK(t.th_t == 140.0);

    std::vector<FeedbackSample> idle_bad{sample(0, 0, 0.0, 0.1)};
    t = adjust_thresholds(kTh, idle_bad, p);
    CHECK(t.th_t == 145.0);

    CHECK_THROWS_AS(adjust_thresholds(kTh, {}, p), Error);

    std::vector<FeedbackSample> both{sample(1, 0, 0.5, 0.0), sample(0, 0, 0.0, 0.0)};
    Thresholds cur = kTh;
    for (int i = 0; i < 100; ++i) {
        cur = adjust_thresholds(cur, both, p);
        CHECK(cur.th_t < cur.th_p);
        CHECK(cur.th_t <= cur.th_p - p.margin + 1e-12);
    }
}

TEST_CASE("objective delta") {
    netsim::KpiRecord a, b;
    a.throughput_mbps = 200.0;
    a.energy_efficiency = 0.3;
    b = a;
    const std::vector<MetricScale> m{{"throughput_mbps", 100.0}};
    CHECK(objective_delta(a, b, m) == 0.0);
    b.throughput_mbps = 210.0;
    CHECK(objective_delta(a, b, m) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(objective_delta(b, a, m) == doctest::Approx(-0.1).epsilon(1e-14));
    b.energy_efficiency = 0.4;
    const auto d = default_metrics();
    CHECK(objective_delta(a, b, d) == doctest::Approx(-objective_delta(b, a, d)));
    CHECK_THROWS_AS(objective_delta(a, b, {{"jitter", 1.0}}), Error);
    CHECK_THROWS_AS(metric_value(a, "nope"), Error);
}

TEST_CASE("decision log round trip and audit") {
    Orchestrator o(kTh, 1);
    std::vector<double> preds;
    for (int i = 0; i < 200; ++i) preds.push_back(180.0 + 80.0 * std::sin(i * 0.1));
    trace(o, preds);
    const auto& log = o.log();
    REQUIRE(log.size() == preds.size());
    auto audit = audit_log(log, 1);
    CHECK(audit.frames == 200);
    CHECK(audit.violations == 0);

    const auto path = (std::filesystem::temp_directory_path() / "ranopt_test_decisions.csv").string();
    write_decision_log(path, log);
    auto back = read_decision_log(path);
    REQUIRE(back.size() == log.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        CHECK(back[i].frame == log[i].frame);
        CHECK(back[i].predicted_mbps == log[i].predicted_mbps);
        CHECK(back[i].decision == log[i].decision);
        CHECK(back[i].S == log[i].S);
        CHECK(back[i].V == log[i].V);
    }
    std::filesystem::remove(path);

    auto bad = log;
    bad[50].S = 1;
    bad[50].V = 1;
    CHECK(audit_log(bad, 1).violations > 0);
    auto wrong = log;
    wrong[10].decision = wrong[10].decision == Decision::Idle ? Decision::ActivateSteering : Decision::Idle;
    CHECK(audit_log(wrong, 1).violations > 0);
}
