#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "evalkit/evalkit.hpp"

using namespace ranopt;
using namespace ranopt::evalkit;

namespace {

RunData make_run(const std::string& mode, double tput_scale, double ee_scale, std::uint64_t seed = 1) {
    RunData r;
    r.mode = mode;
    r.scenario_id = "abc";
    r.seed = seed;
    for (int f = 0; f < 100; ++f) {
        KpiRow k;
        k.frame = f;
        k.throughput_mbps = tput_scale * (150.0 + f);
        k.ee = ee_scale * (0.3 + 0.001 * f);
        k.drop_rate = 0.01 * (f % 5);
        k.power_w = 500.0;
        r.kpi.push_back(k);
        r.volume_mbps.push_back(150.0 + f);
    }
    return r;
}

const Delta* find_delta(const ComparisonReport& r, const std::string& name) {
    for (const auto& d : r.deltas)
        if (d.name == name) return &d;
    return nullptr;
}

std::string tmp(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

} // namespace

TEST_CASE("residuals") {
    const std::vector<double> y{200, 210}, yh{195, 215};
    auto r = residuals(y, yh);
    REQUIRE(r.e.size() == 2);
    CHECK(r.e[0] == 5.0);
    CHECK(r.e[1] == -5.0);
    auto z = residuals(y, y);
    for (double e : z.e) CHECK(e == 0.0);
    const std::vector<double> shorter{1.0};
    CHECK_THROWS_AS(residuals(y, shorter), Error);

    auto s = residual_stats(r);
    CHECK(s.n == 2);
    CHECK(s.mean == 0.0);
    CHECK(s.std == doctest::Approx(5.0));
    CHECK(s.mae == doctest::Approx(5.0));
    CHECK(s.rmse == doctest::Approx(5.0));
}

TEST_CASE("unbiased constant predictor has zero-mean residuals") {
    Rng rng(17);
    std::normal_distribution<double> noise(0.0, 4.0);
    const std::size_t n = 20000;
    std::vector<double> y(n), yh(n, 100.0);
    for (auto& v : y) v = 100.0 + noise(rng);
    auto s = residual_stats(residuals(y, yh));
    CHECK(std::abs(s.mean) <= 3.0 * 4.0 / std::sqrt(double(n)));
}

TEST_CASE("residual stats ignore pair order") {
    std::vector<double> y{1, 4, 9, 16, 25}, yh{2, 3, 10, 15, 26};
    auto a = residual_stats(residuals(y, yh));
    std::reverse(y.begin(), y.end());
    std::reverse(yh.begin(), yh.end());
    auto b = residual_stats(residuals(y, yh));
    CHECK(a.mean == doctest::Approx(b.mean));
    CHECK(a.std == doctest::Approx(b.std));
    CHECK(a.rmse == doctest::Approx(b.rmse));
}

TEST_CASE("identical runs give zero deltas") {
    auto a = make_run("no_app", 1.0, 1.0);
    auto b = a;
    b.mode = "proposed";
    auto rep = compare_modes({a, b});
    REQUIRE(!rep.deltas.empty());
    for (const auto& d : rep.deltas) CHECK(d.value == 0.0);
}

TEST_CASE("headline deltas and recomputation from CSV") {
    auto s = make_run("always_steering", 1.0, 1.0);
    auto v = make_run("always_sleeping", 0.8, 1.3);
    auto p = make_run("proposed", 1.0, 1.2);
    auto rep = compare_modes({s, v, p});
    const auto* ee = find_delta(rep, "proposed_vs_always_steering_ee");
    const auto* tp = find_delta(rep, "proposed_vs_always_sleeping_throughput");
    REQUIRE(ee);
    REQUIRE(tp);
    CHECK(ee->value == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(tp->value == doctest::Approx(0.25).epsilon(1e-12));

    // write KPI CSVs, read back and recompute the means by hand
    auto write = [](const std::string& path, const RunData& r) {
        std::ofstream o(path);
        o.precision(17);
        for (std::size_t i = 0; i < kpi_columns().size(); ++i) o << (i ? "," : "") << kpi_columns()[i];
        o << "\n";
        for (const auto& k : r.kpi)
            o << k.frame << "," << k.throughput_mbps << "," << k.latency_ms[0] << "," << k.latency_ms[1] << ","
              << k.latency_ms[2] << "," << k.drop_rate << "," << k.power_w << "," << k.ee << "\n";
    };
    write(tmp("ranopt_kpi_s.csv"), s);
    write(tmp("ranopt_kpi_p.csv"), p);
    const auto ks = read_kpi_csv(tmp("ranopt_kpi_s.csv"));
    const auto kp = read_kpi_csv(tmp("ranopt_kpi_p.csv"));
    double es = 0.0, ep = 0.0;
    for (const auto& k : ks) es += k.ee;
    for (const auto& k : kp) ep += k.ee;
    es /= double(ks.size());
    ep /= double(kp.size());
    CHECK(std::abs((ep - es) / es - ee->value) <= 1e-9);
    std::filesystem::remove(tmp("ranopt_kpi_s.csv"));
    std::filesystem::remove(tmp("ranopt_kpi_p.csv"));
    CHECK_THROWS_AS(read_kpi_csv(tmp("ranopt_no_such_kpi.csv")), MissingArtifact);
}

TEST_CASE("mismatched runs are rejected") {
    auto a = make_run("no_app", 1.0, 1.0);
    auto b = make_run("proposed", 1.0, 1.0, 2);
    CHECK_THROWS_AS(compare_modes({a, b}), Error);
    b = a;
    b.scenario_id = "other";
    CHECK_THROWS_AS(compare_modes({a, b}), Error);
    b = a;
    b.kpi.pop_back();
    CHECK_THROWS_AS(compare_modes({a, b}), Error);
    CHECK_THROWS_AS(compare_modes({}), Error);
}

TEST_CASE("volume bins") {
    auto r = make_run("no_app", 1.0, 1.0);
    auto bins = volume_bins(r, 20.0);
    std::size_t total = 0;
    for (const auto& b : bins) {
        total += b.frames;
        CHECK(b.hi - b.lo == doctest::Approx(20.0));
    }
    CHECK(total == r.kpi.size());
    CHECK(bins.front().lo == 140.0);
}

TEST_CASE("sweep CSV round trip") {
    std::vector<SweepRow> rows(2);
    rows[0] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0, false};
    rows[1] = {140.0, 139.2, 0.31, 0.001, 138.0, 0.28, 0.0005, 1.25, true};
    write_sweep_csv(tmp("ranopt_sweep.csv"), rows);
    auto back = read_sweep_csv(tmp("ranopt_sweep.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].drop_rate == 0.0);
    CHECK(back[1].volume_mbps == 140.0);
    CHECK(back[1].ee == doctest::Approx(0.31));
    CHECK(back[1].ee_awake == doctest::Approx(0.28));
    CHECK(back[1].mean_sleeping == doctest::Approx(1.25));
    CHECK(back[1].flagged);
    CHECK_FALSE(back[0].flagged);
    std::filesystem::remove(tmp("ranopt_sweep.csv"));
}

TEST_CASE("report outputs") {
    auto rep = compare_modes({make_run("no_app", 1.0, 1.0), make_run("proposed", 1.1, 1.0)});
    auto j = to_json(rep);
    CHECK(j["modes"].size() == 2);
    CHECK(to_text(rep).find("proposed") != std::string::npos);
    CHECK(relative_delta(110.0, 100.0) == doctest::Approx(0.1));
}
