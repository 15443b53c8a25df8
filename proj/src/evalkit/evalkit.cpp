#include "evalkit/evalkit.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "common/csv.hpp"
#include "common/error.hpp"

namespace ranopt::evalkit {

ResidualSeries residuals(std::span<const double> y, std::span<const double> yhat, std::string source) {
    if (y.size() != yhat.size())
        throw Error("evalkit", "residuals: " + std::to_string(y.size()) + " actual vs " + std::to_string(yhat.size()) + " predicted values");
    ResidualSeries r;
    r.source = std::move(source);
    r.e.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r.e[i] = y[i] - yhat[i];
    return r;
}

ResidualStats residual_stats(const ResidualSeries& r) {
    ResidualStats s;
    s.source = r.source;
    s.n = r.e.size();
    if (s.n == 0) return s;
    double sum = 0.0, abs = 0.0, sq = 0.0;
    for (double e : r.e) {
        sum += e;
        abs += std::fabs(e);
        sq += e * e;
    }
    const double n = static_cast<double>(s.n);
    s.mean = sum / n;
    double var = 0.0;
    for (double e : r.e) var += (e - s.mean) * (e - s.mean);
    s.std = std::sqrt(var / n);
    s.mae = abs / n;
    s.rmse = std::sqrt(sq / n);
    return s;
}

std::vector<KpiRow> read_kpi_csv(const std::string& path) {
    if (!std::filesystem::exists(path)) throw MissingArtifact("evalkit", "missing KPI file " + path);
    const auto t = csv::read(path);
    const auto& cols = kpi_columns();
    std::vector<std::vector<double>> v;
    for (const auto& c : cols) v.push_back(t.numeric(c));
    std::vector<KpiRow> rows(v[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].frame = static_cast<std::int64_t>(v[0][i]);
        rows[i].throughput_mbps = v[1][i];
        for (int k = 0; k < 3; ++k) rows[i].latency_ms[k] = v[2 + static_cast<std::size_t>(k)][i];
        rows[i].drop_rate = v[5][i];
        rows[i].power_w = v[6][i];
        rows[i].ee = v[7][i];
    }
    return rows;
}

ModeAggregate aggregate(const std::string& mode, std::span<const KpiRow> rows) {
    ModeAggregate a;
    a.mode = mode;
    a.frames = rows.size();
    if (rows.empty()) return a;
    for (const auto& r : rows) {
        a.mean_throughput_mbps += r.throughput_mbps;
        a.mean_ee += r.ee;
        a.mean_drop_rate += r.drop_rate;
        a.mean_power_w += r.power_w;
    }
    const double n = static_cast<double>(rows.size());
    a.mean_throughput_mbps /= n;
    a.mean_ee /= n;
    a.mean_drop_rate /= n;
    a.mean_power_w /= n;
    return a;
}

double relative_delta(double value, double reference) {
    if (reference == 0.0) return value == 0.0 ? 0.0 : std::copysign(INFINITY, value);
    return (value - reference) / reference;
}

std::vector<VolumeBin> volume_bins(const RunData& run, double w) {
    if (!(w > 0.0)) throw Error("evalkit", "bin width must be positive");
    if (run.volume_mbps.size() != run.kpi.size()) throw Error("evalkit", "volume series and KPI log lengths differ");
    std::map<long, VolumeBin> bins;
    for (std::size_t i = 0; i < run.kpi.size(); ++i) {
        const long k = static_cast<long>(std::floor(run.volume_mbps[i] / w));
        auto& b = bins[k];
        b.lo = static_cast<double>(k) * w;
        b.hi = b.lo + w;
        b.mode = run.mode;
        ++b.frames;
        b.mean_throughput_mbps += run.kpi[i].throughput_mbps;
        b.mean_ee += run.kpi[i].ee;
        b.mean_drop_rate += run.kpi[i].drop_rate;
    }
    std::vector<VolumeBin> out;
    for (auto& [k, b] : bins) {
        const double n = static_cast<double>(b.frames);
        b.mean_throughput_mbps /= n;
        b.mean_ee /= n;
        b.mean_drop_rate /= n;
        out.push_back(b);
    }
    return out;
}

ComparisonReport compare_modes(const std::vector<RunData>& runs, double bin_mbps) {
    if (runs.empty()) throw Error("evalkit", "compare needs at least one run");
    for (const auto& r : runs) {
        if (r.scenario_id != runs[0].scenario_id || r.seed != runs[0].seed)
            throw Error("evalkit", "runs '" + runs[0].mode + "' and '" + r.mode + "' were produced from different scenarios or seeds");
        if (r.kpi.size() != runs[0].kpi.size())
            throw Error("evalkit", "runs '" + runs[0].mode + "' and '" + r.mode + "' have different durations");
    }
    ComparisonReport rep;
    for (const auto& r : runs) {
        rep.modes.push_back(aggregate(r.mode, r.kpi));
        auto b = volume_bins(r, bin_mbps);
        rep.bins.insert(rep.bins.end(), b.begin(), b.end());
    }
    const auto& ref = rep.modes[0];
    for (const auto& m : rep.modes) {
        rep.deltas.push_back({m.mode + "_vs_" + ref.mode + "_throughput", m.mode, ref.mode, "throughput",
                              relative_delta(m.mean_throughput_mbps, ref.mean_throughput_mbps)});
        rep.deltas.push_back({m.mode + "_vs_" + ref.mode + "_ee", m.mode, ref.mode, "ee", relative_delta(m.mean_ee, ref.mean_ee)});
        rep.deltas.push_back({m.mode + "_vs_" + ref.mode + "_drop_rate", m.mode, ref.mode, "drop_rate",
                              relative_delta(m.mean_drop_rate, ref.mean_drop_rate)});
    }
    auto find = [&](const std::string& mode) -> const ModeAggregate* {
        for (const auto& m : rep.modes)
            if (m.mode == mode) return &m;
        return nullptr;
    };
    const auto* p = find("proposed");
    if (const auto* s = find("always_steering"); p && s)
        rep.deltas.push_back({"proposed_vs_always_steering_ee", "proposed", "always_steering", "ee",
                              relative_delta(p->mean_ee, s->mean_ee)});
    if (const auto* s = find("always_sleeping"); p && s)
        rep.deltas.push_back({"proposed_vs_always_sleeping_throughput", "proposed", "always_sleeping", "throughput",
                              relative_delta(p->mean_throughput_mbps, s->mean_throughput_mbps)});
    return rep;
}

nlohmann::json to_json(const ComparisonReport& r) {
    nlohmann::json j;
    j["modes"] = nlohmann::json::array();
    for (const auto& m : r.modes)
        j["modes"].push_back({{"mode", m.mode},
                              {"frames", m.frames},
                              {"mean_throughput_mbps", m.mean_throughput_mbps},
                              {"mean_ee_mbits_per_joule", m.mean_ee},
                              {"mean_drop_rate", m.mean_drop_rate},
                              {"mean_power_w", m.mean_power_w}});
    j["residuals"] = nlohmann::json::array();
    for (const auto& s : r.residuals)
        j["residuals"].push_back({{"source", s.source}, {"n", s.n}, {"mean", s.mean}, {"std", s.std}, {"mae", s.mae}, {"rmse", s.rmse}});
    j["deltas"] = nlohmann::json::array();
    for (const auto& d : r.deltas)
        j["deltas"].push_back({{"name", d.name}, {"mode", d.mode}, {"reference", d.reference}, {"metric", d.metric}, {"relative", d.value}});
    return j;
}

std::string to_text(const ComparisonReport& r) {
    std::ostringstream o;
    char buf[256];
    o << "Mode comparison\n";
    std::snprintf(buf, sizeof buf, "%-18s %8s %14s %12s %10s %10s\n", "mode", "frames", "tput [Mbps]", "EE [Mbit/J]", "drop", "power [W]");
    o << buf;
    for (const auto& m : r.modes) {
        std::snprintf(buf, sizeof buf, "%-18s %8zu %14.3f %12.5f %10.5f %10.2f\n", m.mode.c_str(), m.frames, m.mean_throughput_mbps,
                      m.mean_ee, m.mean_drop_rate, m.mean_power_w);
        o << buf;
    }
    if (!r.residuals.empty()) {
        o << "\nResiduals (actual - predicted, Mbps)\n";
        std::snprintf(buf, sizeof buf, "%-18s %8s %10s %10s %10s %10s\n", "source", "n", "mean", "std", "MAE", "RMSE");
        o << buf;
        for (const auto& s : r.residuals) {
            std::snprintf(buf, sizeof buf, "%-18s %8zu %10.4f %10.4f %10.4f %10.4f\n", s.source.c_str(), s.n, s.mean, s.std, s.mae, s.rmse);
            o << buf;
        }
    }
    o << "\nRelative deltas\n";
    for (const auto& d : r.deltas) {
        std::snprintf(buf, sizeof buf, "%-48s %+10.4f%%\n", d.name.c_str(), 100.0 * d.value);
        o << buf;
    }
    return o.str();
}

void write_report(const std::string& dir, const ComparisonReport& r) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir + "/report.txt");
        if (!f) throw Error("evalkit", "cannot write " + dir + "/report.txt");
        f << to_text(r);
    }
    {
        std::ofstream f(dir + "/report.json");
        if (!f) throw Error("evalkit", "cannot write " + dir + "/report.json");
        f << to_json(r).dump(2) << "\n";
    }
    csv::Writer w(dir + "/aggregates.csv");
    w.header({"mode", "frames", "mean_throughput_mbps", "mean_ee_mbits_per_joule", "mean_drop_rate", "mean_power_w"});
    for (const auto& m : r.modes)
        w.row({m.mode, std::to_string(m.frames), csv::fmt(m.mean_throughput_mbps), csv::fmt(m.mean_ee), csv::fmt(m.mean_drop_rate),
               csv::fmt(m.mean_power_w)});
    csv::Writer b(dir + "/volume_bins.csv");
    b.header({"mode", "bin_lo_mbps", "bin_hi_mbps", "frames", "mean_throughput_mbps", "mean_ee_mbits_per_joule", "mean_drop_rate"});
    for (const auto& v : r.bins)
        b.row({v.mode, csv::fmt(v.lo), csv::fmt(v.hi), std::to_string(v.frames), csv::fmt(v.mean_throughput_mbps), csv::fmt(v.mean_ee),
               csv::fmt(v.mean_drop_rate)});
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    csv::Writer w(path);
    w.header({"volume_mbps", "offered_mbps", "ee_mbits_per_joule", "drop_rate", "throughput_mbps", "ee_awake", "drop_rate_awake",
              "mean_sleeping_cells", "flagged"});
    for (const auto& r : rows)
        w.row({csv::fmt(r.volume_mbps), csv::fmt(r.offered_mbps), csv::fmt(r.ee), csv::fmt(r.drop_rate), csv::fmt(r.throughput_mbps),
               csv::fmt(r.ee_awake), csv::fmt(r.drop_rate_awake), csv::fmt(r.mean_sleeping), r.flagged ? "1" : "0"});
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
    if (!std::filesystem::exists(path)) throw MissingArtifact("evalkit", "missing sweep table " + path);
    const auto t = csv::read(path);
    const auto v = t.numeric("volume_mbps"), o = t.numeric("offered_mbps"), e = t.numeric("ee_mbits_per_joule"),
               d = t.numeric("drop_rate"), tp = t.numeric("throughput_mbps"), ea = t.numeric("ee_awake"),
               da = t.numeric("drop_rate_awake"), ms = t.numeric("mean_sleeping_cells"), f = t.numeric("flagged");
    std::vector<SweepRow> rows(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) rows[i] = {v[i], o[i], e[i], d[i], tp[i], ea[i], da[i], ms[i], f[i] != 0.0};
    return rows;
}

} // namespace ranopt::evalkit
