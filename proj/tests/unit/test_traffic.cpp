#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "traffic/traffic.hpp"

using namespace ranopt;
using namespace ranopt::traffic;

namespace {

double empirical_mean(const TrafficClassSpec& spec, std::uint64_t seed, int n) {
    Rng rng(seed);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += sample_interarrival(spec, rng);
    return s / n;
}

const std::vector<TrafficClass> kAll = {TrafficClass::Video, TrafficClass::Gaming, TrafficClass::Voice};

TrafficGenerator::Options quiet(std::uint64_t seed) {
    TrafficGenerator::Options o;
    o.seed = seed;
    o.noise_sigma = 0.0;
    return o;
}

} // namespace

TEST_CASE("default traffic table") {
    const auto t = default_traffic_table();
    CHECK(t[0].arrival == ArrivalKind::Pareto);
    CHECK(t[1].arrival == ArrivalKind::Uniform);
    CHECK(t[2].arrival == ArrivalKind::Poisson);
    CHECK(t[0].mean_interarrival_ms == 12.5);
    CHECK(t[1].mean_interarrival_ms == 40.0);
    CHECK(t[2].mean_interarrival_ms == 0.1);
    CHECK(t[0].packet_size_bytes == 250.0);
    CHECK(t[1].packet_size_bytes == 120.0);
    CHECK(t[2].packet_size_bytes == 30.0);
    CHECK(t[0].qos_throughput_mbps == 10.0);
    CHECK(t[1].qos_throughput_mbps == 5.0);
    CHECK(t[2].qos_throughput_mbps == 0.1);
    for (const auto& s : t) CHECK_NOTHROW(s.validate());
}

TEST_CASE("voice inter-arrival mean over a million draws") {
    const auto voice = default_traffic_table()[2];
    CHECK(std::abs(empirical_mean(voice, 11, 1'000'000) - 0.1) / 0.1 < 0.01);
}

TEST_CASE("every arrival kind hits its mean within 2 percent") {
    for (const auto& spec : default_traffic_table()) {
        const double m = empirical_mean(spec, 1234, 1'000'000);
        CHECK(std::abs(m - spec.mean_interarrival_ms) / spec.mean_interarrival_ms < 0.02);
    }
}

TEST_CASE("degenerate uniform range is deterministic") {
    auto g = default_traffic_table()[1];
    g.uniform_half_width = 0.0;
    Rng rng(3);
    for (int i = 0; i < 100; ++i) CHECK(sample_interarrival(g, rng) == 40.0);
}

TEST_CASE("pareto scale follows from the mean") {
    const auto v = default_traffic_table()[0];
    const double scale = v.mean_interarrival_ms * (v.pareto_shape - 1.0) / v.pareto_shape;
    CHECK(scale == doctest::Approx(7.5).epsilon(1e-15));
    Rng rng(9);
    double lo = 1e9, hi = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const double x = sample_interarrival(v, rng);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    CHECK(lo >= 7.5);
    CHECK(lo < 7.51);
    CHECK(hi <= kParetoCapFactor * 12.5);
}

TEST_CASE("invalid specs are rejected") {
    auto s = default_traffic_table()[0];
    s.mean_interarrival_ms = 0.0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = default_traffic_table()[0];
    s.pareto_shape = 1.0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = default_traffic_table()[2];
    s.qos_delay_budget_ms = -1.0;
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("profile calibration spans trough and peak ratios") {
    const auto p = calibrate_profile(298.0, 116.0, 207.0);
    CHECK(p.min_multiplier() == doctest::Approx(116.0 / 207.0).epsilon(1e-12));
    CHECK(p.max_multiplier() == doctest::Approx(298.0 / 207.0).epsilon(1e-12));
    CHECK(std::abs(p.min_multiplier() - 0.560) < 1e-3);
    CHECK(std::abs(p.max_multiplier() - 1.440) < 1e-3);
    // sampled curve stays inside and touches both extremes
    double lo = 1e9, hi = 0.0;
    for (int s = 0; s < 86400; s += 60) {
        lo = std::min(lo, p.multiplier_at(s));
        hi = std::max(hi, p.multiplier_at(s));
    }
    CHECK(lo == doctest::Approx(116.0 / 207.0).epsilon(1e-9));
    CHECK(hi == doctest::Approx(298.0 / 207.0).epsilon(1e-9));
    CHECK(p.multiplier_at(1000.0) == doctest::Approx(p.multiplier_at(1000.0 + kDaySeconds)));
}

TEST_CASE("flat day and invalid calibration") {
    const auto flat = calibrate_profile(207.0, 207.0, 207.0);
    for (int s = 0; s < 86400; s += 3600) CHECK(flat.multiplier_at(s) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(calibrate_profile(100.0, 200.0, 150.0), Error);
    CHECK_THROWS_AS(calibrate_profile(100.0, 0.0, 150.0), Error);
}

TEST_CASE("no sources means no demand") {
    TrafficGenerator g(default_traffic_table(), 0, kAll, calibrate_profile(298, 116, 155), quiet(1));
    CHECK(g.num_flows() == 0);
    CHECK(g.generate_frame_demand(0, 1'000'000'000).empty());
}

TEST_CASE("deterministic voice source counts packets exactly") {
    auto table = default_traffic_table();
    table[2].arrival = ArrivalKind::Uniform;
    table[2].uniform_half_width = 0.0;
    TrafficGenerator g(table, 1, {TrafficClass::Voice}, calibrate_profile(1, 1, 1), quiet(2));
    g.set_constant_multiplier(1.0);
    const auto d = g.generate_frame_demand(0, 1'000'000'000);
    REQUIRE(d.size() == 1);
    CHECK(d[0] == 10'000 * 240);
}

TEST_CASE("generation is bit-identical for equal seeds and non-negative") {
    auto make = [] {
        return TrafficGenerator(default_traffic_table(), 20, kAll, calibrate_profile(298, 116, 51.68), TrafficGenerator::Options{7, 60.0, 0.0, 0.03, 3600.0});
    };
    auto a = make();
    auto b = make();
    for (int f = 0; f < 30; ++f) {
        const auto da = a.generate_frame_demand(std::int64_t(f) * 1'000'000'000, 1'000'000'000);
        const auto db = b.generate_frame_demand(std::int64_t(f) * 1'000'000'000, 1'000'000'000);
        CHECK(da == db);
        for (auto v : da) CHECK(v >= 0);
    }
}

TEST_CASE("flow indexing is ue major") {
    TrafficGenerator g(default_traffic_table(), 4, kAll, calibrate_profile(1, 1, 1), quiet(1));
    REQUIRE(g.num_flows() == 12);
    for (std::size_t f = 0; f < 12; ++f) {
        CHECK(g.source(f).ue_id == int(f / 3));
        CHECK(g.spec_of(f).name == kAll[f % 3]);
    }
}

TEST_CASE("arrival clock is monotone") {
    auto spec = default_traffic_table()[0];
    FlowSource src{0, 0, &spec, Rng(4), 0};
    std::int64_t last = 0;
    std::int64_t total = 0;
    for (int f = 0; f < 200; ++f) {
        total += count_arrivals(src, std::int64_t(f) * 10'000'000, std::int64_t(f + 1) * 10'000'000);
        CHECK(src.next_arrival_ns >= last);
        last = src.next_arrival_ns;
    }
    // 2 s of a 12.5 ms mean process
    CHECK(total > 100);
    CHECK(total < 220);
}

TEST_CASE("60 UEs at the peak hour reach the peak target") {
    const std::vector<TrafficClass> classes = kAll;
    TrafficGenerator probe(default_traffic_table(), 60, classes, calibrate_profile(1, 1, 1), quiet(1));
    const double base = probe.base_demand_mbps();
    CHECK(base == doctest::Approx(60 * (0.16 + 0.024 + 2.4)).epsilon(1e-12));
    const auto prof = calibrate_profile(298.0, 116.0, base);
    // trough at 04:00 so the peak sits at 16:00
    TrafficGenerator g(default_traffic_table(), 60, classes, prof, TrafficGenerator::Options{3, 1.0, 16.0 * 3600.0 - 30.0, 0.03, 3600.0});
    double sum = 0.0;
    for (int f = 0; f < 60; ++f) {
        const auto d = g.generate_frame_demand(std::int64_t(f) * 1'000'000'000, 1'000'000'000);
        sum += std::accumulate(d.begin(), d.end(), 0.0) * 1e-6;
    }
    CHECK(std::abs(sum / 60.0 - 298.0) / 298.0 < 0.10);
}

TEST_CASE("calibrated day reproduces peak and trough") {
    const std::vector<TrafficClass> classes = kAll;
    TrafficGenerator probe(default_traffic_table(), 60, classes, calibrate_profile(1, 1, 1), quiet(1));
    const auto prof = calibrate_profile(298.0, 116.0, probe.base_demand_mbps());
    // one profile day compressed into 1440 one-second frames
    TrafficGenerator g(default_traffic_table(), 60, classes, prof, TrafficGenerator::Options{5, 60.0, 0.0, 0.03, 3600.0});
    std::vector<double> hourly(24, 0.0);
    for (int f = 0; f < 1440; ++f) {
        const auto d = g.generate_frame_demand(std::int64_t(f) * 1'000'000'000, 1'000'000'000);
        hourly[f / 60] += std::accumulate(d.begin(), d.end(), 0.0) * 1e-6 / 60.0;
    }
    const double hi = *std::max_element(hourly.begin(), hourly.end());
    const double lo = *std::min_element(hourly.begin(), hourly.end());
    CHECK(std::abs(hi - 298.0) / 298.0 < 0.10);
    CHECK(std::abs(lo - 116.0) / 116.0 < 0.10);
}

TEST_CASE("low-frequency noise is smooth and seeded") {
    LowFrequencyNoise a(1, 0.03, 3600.0), b(1, 0.03, 3600.0), c(2, 0.03, 3600.0);
    CHECK(a.at(5000.0) == b.at(5000.0));
    CHECK(a.at(5000.0) != c.at(5000.0));
    CHECK(std::abs(a.at(5000.0) - a.at(5001.0)) < 1e-3);
    LowFrequencyNoise none(1, 0.0, 3600.0);
    CHECK(none.at(123.0) == 0.0);
}
