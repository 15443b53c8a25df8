#include <doctest.h>

#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "netsim/netsim.hpp"

using namespace ranopt;
using namespace ranopt::netsim;
using traffic::TrafficClassSpec;

namespace {

const auto kTable = traffic::default_traffic_table();

std::vector<const TrafficClassSpec*> three_flows_per_ue(std::size_t ues) {
    std::vector<const TrafficClassSpec*> out;
    for (std::size_t u = 0; u < ues; ++u)
        for (const auto& s : kTable) out.push_back(&s);
    return out;
}

Network default_net(int ues = 30, std::uint64_t seed = 1) {
    return Network(default_topology(), place_ues(ues, 500.0, seed), three_flows_per_ue(static_cast<std::size_t>(ues)),
                   RadioConfig{}, NetworkOptions{});
}

BaseStationConfig lone_macro() {
    auto m = default_topology().front();
    return m;
}

void check_audit(const FrameResult& r) {
    for (const auto& a : r.audit) CHECK(a.arrived + a.queued_before == a.served + a.dropped + a.queued_after);
}

} // namespace

TEST_CASE("pathloss closed forms") {
    const PathlossParams p{128.1, 3.5, 1000.0};
    CHECK(pathloss_db(1000.0, p) == doctest::Approx(128.1).epsilon(1e-15));
    CHECK(pathloss_db(10000.0, p) == doctest::Approx(128.1 + 35.0).epsilon(1e-14));
    const auto micro = default_pathloss(PathlossModel::UrbanMicro);
    CHECK(pathloss_db(400.0, micro) - pathloss_db(200.0, micro) == doctest::Approx(10.0 * 3.67 * std::log10(2.0)));
    CHECK(pathloss_db(0.2, micro) == pathloss_db(1.0, micro));
    const auto macro = default_pathloss(PathlossModel::UrbanMacro);
    CHECK(macro.pl0_db == 128.1);
    CHECK(macro.exponent == 3.76);
    CHECK(micro.pl0_db == 140.7);
}

TEST_CASE("idle network draws fixed power only") {
    auto net = default_net();
    std::vector<std::int64_t> zero(net.num_flows(), 0);
    const auto r = net.step_frame(zero, net.default_assignment());
    CHECK(r.kpi.throughput_mbps == 0.0);
    CHECK(r.kpi.power_w == doctest::Approx(130.0 + 4 * 56.0).epsilon(1e-15));
    CHECK(r.kpi.energy_efficiency == 0.0);
    CHECK(r.kpi.drop_rate == 0.0);
}

TEST_CASE("single uncongested UE is served in full") {
    std::vector<const TrafficClassSpec*> flows{&kTable[0]};
    Network net({lone_macro()}, {{100.0, 0.0}}, flows, RadioConfig{}, NetworkOptions{});
    const std::int64_t demand = 1'000'000;
    REQUIRE(net.peak_rate_mbps(0, 0) > 5.0);
    const auto r = net.step_frame(std::vector<std::int64_t>{demand}, std::vector<std::size_t>{0});
    CHECK(r.kpi.throughput_mbps == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.kpi.drop_rate == 0.0);
    CHECK(r.flows[0].served_bits == demand);
    // served in the slot it arrived: half a slot of delay
    CHECK(r.kpi.mean_latency_ms[0] == doctest::Approx(5.0));
    check_audit(r);
}

TEST_CASE("twice the capacity with a one-frame budget drops half") {
    TrafficClassSpec slow = kTable[0];
    slow.qos_delay_budget_ms = 1000.0;
    std::vector<const TrafficClassSpec*> flows{&slow};
    Network net({lone_macro()}, {{300.0, 0.0}}, flows, RadioConfig{}, NetworkOptions{});
    const double cap_bits = net.peak_rate_mbps(0, 0) * 1e6;
    const auto demand = static_cast<std::int64_t>(2.0 * cap_bits);
    std::int64_t served = 0, dropped = 0;
    for (int f = 0; f < 40; ++f) {
        const auto r = net.step_frame(std::vector<std::int64_t>{demand}, std::vector<std::size_t>{0});
        check_audit(r);
        if (f >= 10) {
            served += r.flows[0].served_bits;
            dropped += r.flows[0].dropped_bits;
        }
    }
    const double rate = double(dropped) / double(served + dropped);
    CHECK(std::abs(rate - 0.5) < 0.01);
}

TEST_CASE("fully loaded small cell power") {
    auto net = default_net(1, 3);
    // push an overwhelming demand through small cell 1
    const std::size_t b = 1;
    std::vector<std::int64_t> demand(3, 0);
    demand[0] = 10'000'000'000LL;
    std::vector<std::size_t> asg(3, b);
    const auto r = net.step_frame(demand, asg);
    CHECK(r.bs[b].used_fraction == 1.0);
    CHECK(r.bs[b].power_w == doctest::Approx(56.0 + 2.6 * dbm_to_w(43.0)).epsilon(1e-12));
    // 43 dBm is 19.95 W, so the rounded 20 W figure gives 108 W
    CHECK(r.bs[b].power_w == doctest::Approx(108.0).epsilon(2e-3));
    CHECK(r.bs[b].overloaded);
}

TEST_CASE("sleeping cells and power sums") {
    auto net = default_net();
    std::vector<std::int64_t> zero(net.num_flows(), 0);
    net.set_sleep(2, true);
    auto r = net.step_frame(zero, net.default_assignment());
    CHECK(r.bs[2].power_w == 6.0);
    for (std::size_t b = 1; b < 5; ++b) net.set_sleep(b, true);
    r = net.step_frame(zero, net.default_assignment());
    CHECK(r.kpi.power_w == doctest::Approx(r.bs[0].power_w + 4 * 6.0).epsilon(1e-15));
    CHECK(net.frame_power() == doctest::Approx(130.0 + 24.0));
    for (auto a : net.default_assignment()) CHECK(a == net.macro_index());
}

TEST_CASE("sleeping a loaded cell hands its queue to the macro") {
    auto net = default_net(20, 4);
    // overload small cell 1 so it carries a backlog
    std::vector<std::int64_t> demand(net.num_flows(), 0);
    std::vector<std::size_t> asg = net.default_assignment();
    for (std::size_t f = 0; f < net.num_flows(); f += 3) {
        demand[f] = 40'000'000;
        asg[f] = 1;
    }
    auto r = net.step_frame(demand, asg);
    check_audit(r);
    const auto before = net.total_queued_bits();
    REQUIRE(net.queued_bits(1) > 0);
    net.set_sleep(1, true);
    CHECK(net.queued_bits(1) == 0);
    CHECK(net.total_queued_bits() == before);
    std::vector<std::int64_t> zero(net.num_flows(), 0);
    std::int64_t served = 0, dropped = 0;
    for (int f = 0; f < 3; ++f) {
        r = net.step_frame(zero, net.default_assignment());
        check_audit(r);
        served += r.audit[0].served + r.audit[1].served + r.audit[2].served;
        dropped += r.audit[0].dropped + r.audit[1].dropped + r.audit[2].dropped;
    }
    CHECK(served + dropped + net.total_queued_bits() == before);
    CHECK(served > 0);
}

TEST_CASE("contract errors") {
    auto net = default_net();
    CHECK_THROWS_AS(net.set_sleep(net.macro_index(), true), Error);
    net.set_sleep(3, true);
    CHECK_THROWS_AS(net.sinr_db(0, 3), Error);
    std::vector<std::int64_t> zero(net.num_flows(), 0);
    std::vector<std::size_t> bad(net.num_flows(), 3);
    CHECK_THROWS_AS(net.step_frame(zero, bad), Error);
    CHECK(net.peak_rate_mbps(0, 3) == 0.0);
}

TEST_CASE("conservation, efficiency and power monotonicity under load") {
    auto a = default_net(60, 9);
    auto b = default_net(60, 9);
    b.set_sleep(4, true);
    Rng rng(2);
    for (int f = 0; f < 20; ++f) {
        std::vector<std::int64_t> demand(a.num_flows());
        for (std::size_t i = 0; i < demand.size(); ++i) demand[i] = std::int64_t(uniform_open0(rng) * 6e6);
        const auto ra = a.step_frame(demand, a.default_assignment());
        const auto rb = b.step_frame(demand, b.default_assignment());
        check_audit(ra);
        check_audit(rb);
        for (const auto* r : {&ra, &rb}) {
            const double ee = double(r->kpi.delivered_bits) * 1e-6 / r->kpi.energy_j;
            CHECK(std::abs(ee - r->kpi.energy_efficiency) <= 1e-12 * ee);
            CHECK(r->kpi.drop_rate >= 0.0);
            CHECK(r->kpi.drop_rate <= 1.0);
        }
    }
    // same state except one sleeping cell
    auto c = default_net(60, 9);
    auto d = default_net(60, 9);
    d.set_sleep(2, true);
    CHECK(d.frame_power() <= c.frame_power());
}

TEST_CASE("sinr never uses a sleeping station as a server") {
    auto net = default_net(40, 5);
    for (std::size_t b = 1; b < 5; ++b) net.set_sleep(b, true);
    for (std::size_t u = 0; u < net.num_ues(); ++u) {
        CHECK(net.default_bs(u) == net.macro_index());
        CHECK(std::isfinite(net.sinr_db(u, net.macro_index())));
    }
}

TEST_CASE("candidates are the macro plus two small cells") {
    auto net = default_net(10, 6);
    for (std::size_t u = 0; u < net.num_ues(); ++u) {
        const auto& c = net.candidates(u);
        REQUIRE(c.size() == 3);
        CHECK(c[0] == net.macro_index());
        CHECK(net.sinr_db(u, c[1]) >= net.sinr_db(u, c[2]));
    }
}
