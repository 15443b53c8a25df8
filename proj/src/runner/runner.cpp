#include "runner/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/hash.hpp"
#include "forecast/train.hpp"
#include "orchestrator/orchestrator.hpp"
#include "rlapps/apps.hpp"

namespace fs = std::filesystem;

namespace ranopt::runner {

const char* version() { return "1.0.0"; }

namespace {

LogFn g_log = [](const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); };

void log(const std::string& m) {
    if (g_log) g_log(m);
}

std::string fmt2(double v, int prec = 3) {
    char b[64];
    std::snprintf(b, sizeof b, "%.*f", prec, v);
    return b;
}

void require_file(const std::string& path, const std::string& hint) {
    if (!fs::exists(path)) throw MissingArtifact("runner", "missing required file " + path + " (" + hint + ")");
}

void write_kpi_header(csv::Writer& w) { w.header(evalkit::kpi_columns()); }

void write_kpi_row(csv::Writer& w, const netsim::KpiRecord& k, std::int64_t frame) {
    w.row({std::to_string(frame), csv::fmt(k.throughput_mbps), csv::fmt(k.mean_latency_ms[0]), csv::fmt(k.mean_latency_ms[1]),
           csv::fmt(k.mean_latency_ms[2]), csv::fmt(k.drop_rate), csv::fmt(k.power_w), csv::fmt(k.energy_efficiency)});
}

struct Manifest {
    std::string stage;
    const RunConfig* cfg = nullptr;
    std::map<std::string, std::string> inputs; // path -> hash
    std::vector<std::string> outputs;           // file names in the stage directory
    nlohmann::json extra = nlohmann::json::object();
};

void write_manifest(const std::string& dir, const Manifest& m) {
    nlohmann::json j;
    j["tool"] = "ranopt";
    j["version"] = version();
    j["stage"] = m.stage;
    j["schema_version"] = kSchemaVersion;
    if (m.cfg) {
        j["config_hash"] = config_hash(*m.cfg);
        j["scenario_id"] = scenario_id(*m.cfg);
        j["seed"] = m.cfg->seed;
        j["mode"] = to_string(m.cfg->mode);
        j["config"] = to_json(*m.cfg);
    }
    j["inputs"] = nlohmann::json::object();
    for (const auto& [p, h] : m.inputs) j["inputs"][p] = h;
    j["outputs"] = nlohmann::json::object();
    for (const auto& o : m.outputs) j["outputs"][o] = file_hash(dir + "/" + o);
    for (auto it = m.extra.begin(); it != m.extra.end(); ++it) j[it.key()] = it.value();
    std::ofstream f(dir + "/manifest.json");
    if (!f) throw Error("runner", "cannot write " + dir + "/manifest.json");
    f << j.dump(2) << "\n";
}

nlohmann::json read_manifest(const std::string& dir) {
    const std::string p = dir + "/manifest.json";
    require_file(p, "not a stage output directory");
    std::ifstream f(p);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw Error("runner", "malformed manifest " + p + ": " + e.what());
    }
}

bool needs_steering(Mode m) { return m == Mode::Proposed || m == Mode::AlwaysSteering; }
bool needs_sleeping(Mode m) { return m == Mode::Proposed || m == Mode::AlwaysSleeping; }

rlapps::SteeringConfig steering_cfg(const RunConfig& cfg) {
    auto s = cfg.rl.steering;
    s.dqn.seed = derive_seed(cfg.seed, {kSteeringAgent, s.dqn.seed});
    return s;
}

rlapps::SleepingConfig sleeping_cfg(const RunConfig& cfg, double warp) {
    auto s = cfg.rl.sleeping;
    s.dqn.seed = derive_seed(cfg.seed, {kSleepingAgent, s.dqn.seed});
    s.epoch_frames = cfg.sleep_epoch_frames(warp);
    return s;
}

int num_candidates(const RunConfig& cfg) { return 1 + cfg.scenario.radio.small_candidates; }

} // namespace

void set_logger(LogFn fn) { g_log = std::move(fn); }

std::string file_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("runner", "cannot read " + path);
    const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return hex64(fnv1a64(data));
}

double Scenario::time_of_day(std::int64_t f) const {
    const double t = (static_cast<double>(f) + 0.5) * static_cast<double>(frame_ns) * 1e-9 * warp;
    return std::fmod(t, traffic::kDaySeconds);
}

Scenario build_scenario(const RunConfig& cfg, std::uint64_t traffic_seed, double warp) {
    const auto& sc = cfg.scenario;
    traffic::TrafficGenerator::Options opts;
    opts.seed = traffic_seed;
    opts.time_warp = warp;
    opts.noise_sigma = sc.noise_sigma;
    opts.noise_knot_s = sc.noise_knot_s;

    const traffic::TrafficGenerator probe(sc.traffic_table, sc.num_ues, sc.flow_classes, traffic::calibrate_profile(1.0, 1.0, 1.0), opts);
    const auto profile = traffic::calibrate_profile(sc.peak_mbps, sc.trough_mbps, probe.base_demand_mbps(), sc.trough_time_s);

    Scenario s;
    s.warp = warp;
    s.frame_ns = static_cast<std::int64_t>(std::llround(sc.network.frame_ms * 1e6));
    s.traffic = std::make_unique<traffic::TrafficGenerator>(sc.traffic_table, sc.num_ues, sc.flow_classes, profile, opts);

    auto stations = netsim::default_topology(sc.small_offset_m);
    for (auto& b : stations) {
        const StationTemplate& t = b.is_macro ? sc.macro : sc.small;
        b.bandwidth_mhz = t.bandwidth_mhz;
        b.carrier_ghz = t.carrier_ghz;
        b.max_tx_dbm = t.max_tx_dbm;
        b.power = t.power;
    }
    std::vector<const traffic::TrafficClassSpec*> specs;
    for (std::size_t f = 0; f < s.traffic->num_flows(); ++f) specs.push_back(&s.traffic->spec_of(f));
    s.net = std::make_unique<netsim::Network>(std::move(stations),
                                              netsim::place_ues(sc.num_ues, sc.ue_radius_m, derive_seed(cfg.seed, {kUePlacement})),
                                              std::move(specs), sc.radio, sc.network);
    return s;
}

double frame_volume(const RunConfig& cfg, const netsim::FrameResult& res) {
    const auto a = pipeline::aggregate(res.slot_offered_mbit, cfg.scenario.network.slot_ms, cfg.scenario.network.frame_ms);
    return a.series.values.at(0);
}

std::vector<double> causal_smooth_tail(const std::vector<double>& history, std::size_t length, const pipeline::SgFilterConfig& sg) {
    if (history.size() < length) throw Error("runner", "not enough history for the forecaster window");
    const std::size_t take = std::min(history.size(), length + static_cast<std::size_t>(sg.window));
    std::vector<double> tail(history.end() - static_cast<std::ptrdiff_t>(take), history.end());
    if (tail.size() < static_cast<std::size_t>(sg.window)) return {history.end() - static_cast<std::ptrdiff_t>(length), history.end()};
    auto c = sg;
    c.edges = pipeline::EdgeMode::Interp;
    const auto sm = pipeline::smooth(tail, c);
    return {sm.end() - static_cast<std::ptrdiff_t>(length), sm.end()};
}

// ---------------------------------------------------------------- simulate

void stage_simulate(const RunConfig& cfg, const std::string& out) {
    fs::create_directories(out);
    const std::int64_t n = cfg.frames_per_day();
    log("simulate: training day, " + std::to_string(n) + " frames");
    Scenario sc = build_scenario(cfg, derive_seed(cfg.seed, {kTrafficDay, 0}), cfg.scenario.time_warp);
    csv::Writer kw(out + "/train_kpi.csv");
    write_kpi_header(kw);
    pipeline::AggregateSeries raw;
    raw.frame_length_ms = cfg.scenario.network.frame_ms;
    for (std::int64_t f = 0; f < n; ++f) {
        const auto d = sc.demand(f);
        const auto res = sc.net->step_frame(d, sc.net->default_assignment());
        write_kpi_row(kw, res.kpi, f);
        raw.values.push_back(frame_volume(cfg, res));
    }
    kw.close();
    pipeline::write_series_csv(out + "/train_series.csv", raw);
    pipeline::write_series_csv(out + "/train_series_smoothed.csv", pipeline::smooth(raw, cfg.smoothing));
    const auto [mn, mx] = std::minmax_element(raw.values.begin(), raw.values.end());
    log("simulate: volume range " + fmt2(*mn, 1) + " .. " + fmt2(*mx, 1) + " Mbps");
    write_manifest(out, {"simulate", &cfg, {}, {"train_kpi.csv", "train_series.csv", "train_series_smoothed.csv"}, {}});
}

// ---------------------------------------------------------------- forecaster

void stage_train_forecaster(const RunConfig& cfg, const std::string& sim_dir, const std::string& out) {
    const std::string in = sim_dir + "/train_series_smoothed.csv";
    require_file(in, "run the simulate stage first");
    fs::create_directories(out);
    const auto series = pipeline::read_series_csv(in, cfg.scenario.network.frame_ms);
    const auto& m = cfg.forecaster.model;
    const pipeline::WindowedDataset ds(series.values, static_cast<std::size_t>(m.input_length), static_cast<std::size_t>(m.horizon),
                                       cfg.forecaster.train_fraction);
    auto tc = cfg.forecaster.train;
    tc.seed = derive_seed(cfg.seed, {kForecaster, tc.seed});
    auto model = forecast::make_model(m, derive_seed(cfg.seed, {kForecaster, 0}));
    log("train-forecaster: " + std::to_string(ds.train_size()) + " training / " + std::to_string(ds.test_size()) + " held-out windows");
    forecast::train(model, ds, tc, [](const forecast::EpochRecord& r) {
        log("train-forecaster: epoch " + std::to_string(r.epoch) + " train " + fmt2(r.train_loss, 5) + " test " + fmt2(r.test_loss, 5));
    });
    forecast::save_model(out + "/forecaster.ckpt", model);
    forecast::write_loss_history(out + "/loss.csv", model.history);
    write_manifest(out, {"train-forecaster", &cfg, {{in, file_hash(in)}}, {"forecaster.ckpt", "loss.csv"}, {}});
}

// ---------------------------------------------------------------- apps

namespace {

void train_steering(const RunConfig& cfg, const std::string& out) {
    const double warp = cfg.rl.train_time_warp;
    rlapps::SteeringXApp app(steering_cfg(cfg), num_candidates(cfg));
    app.set_active(true);
    std::vector<rlapps::EpisodeRecord> hist;
    for (int day = 0; day < cfg.rl.steering_days; ++day) {
        Scenario sc = build_scenario(cfg, derive_seed(cfg.seed, {kTrainDay, 1000 + static_cast<std::uint64_t>(day)}), warp);
        const std::int64_t n = cfg.frames_per_day(warp);
        double rsum = 0.0;
        for (std::int64_t f = 0; f < n; ++f) {
            const auto d = sc.demand(f);
            const auto a = app.decide(*sc.net, d, true);
            const auto res = sc.net->step_frame(d, a);
            rsum += app.feedback(*sc.net, res);
        }
        app.reset_pending();
        const auto& ag = app.agent();
        rlapps::EpisodeRecord r{day, ag.steps(), ag.updates(), rsum / static_cast<double>(n), ag.epsilon(), app.agent().take_mean_loss()};
        hist.push_back(r);
        log("train-apps: steering day " + std::to_string(day) + " mean reward " + fmt2(r.mean_reward, 4) + " eps " + fmt2(r.epsilon, 3) +
            " loss " + fmt2(r.mean_loss, 5));
    }
    app.agent().save(out + "/steering.ckpt", "steering");
    rlapps::write_reward_csv(out + "/steering_rewards.csv", hist);
}

void train_sleeping(const RunConfig& cfg, const std::string& out) {
    const double warp = cfg.rl.train_time_warp;
    const double frame_s = cfg.frame_s();
    std::unique_ptr<rlapps::SleepingRApp> app;
    std::vector<rlapps::EpisodeRecord> hist;
    for (int day = 0; day < cfg.rl.sleeping_days || (day == 0 && !app); ++day) {
        Scenario sc = build_scenario(cfg, derive_seed(cfg.seed, {kTrainDay, 2000 + static_cast<std::uint64_t>(day)}), warp);
        if (!app) app = std::make_unique<rlapps::SleepingRApp>(sleeping_cfg(cfg, warp), sc.net->num_bs());
        if (day >= cfg.rl.sleeping_days) break;
        app->set_active(true);
        const std::int64_t n = cfg.frames_per_day(warp);
        const double before = app->reward_sum();
        const long e0 = app->epochs_closed();
        for (std::int64_t f = 0; f < n; ++f) {
            app->on_frame(*sc.net, sc.time_of_day(f), true);
            const auto d = sc.demand(f);
            const auto res = sc.net->step_frame(d, sc.net->default_assignment());
            app->after_frame(res, frame_s);
        }
        const long ep = app->epochs_closed() - e0;
        app->deactivate(*sc.net);
        const auto& ag = app->agent();
        rlapps::EpisodeRecord r{day, ag.steps(), ag.updates(), ep > 0 ? (app->reward_sum() - before) / static_cast<double>(ep) : 0.0,
                                ag.epsilon(), app->agent().take_mean_loss()};
        hist.push_back(r);
        log("train-apps: sleeping day " + std::to_string(day) + " mean reward " + fmt2(r.mean_reward, 4) + " eps " + fmt2(r.epsilon, 3) +
            " loss " + fmt2(r.mean_loss, 5));
    }
    app->agent().save(out + "/sleeping.ckpt", "sleeping");
    rlapps::write_reward_csv(out + "/sleeping_rewards.csv", hist);
}

} // namespace

void stage_train_apps(const RunConfig& cfg, const std::string& out, bool all) {
    fs::create_directories(out);
    std::vector<std::string> outputs;
    if (all || needs_steering(cfg.mode)) {
        train_steering(cfg, out);
        outputs.insert(outputs.end(), {"steering.ckpt", "steering_rewards.csv"});
    }
    if (all || needs_sleeping(cfg.mode)) {
        train_sleeping(cfg, out);
        outputs.insert(outputs.end(), {"sleeping.ckpt", "sleeping_rewards.csv"});
    }
    write_manifest(out, {"train-apps", &cfg, {}, outputs, {}});
}

// ---------------------------------------------------------------- evaluate

void stage_evaluate(const RunConfig& cfg, const std::string& sim_dir, const std::string& model_dir, const std::string& apps_dir,
                    const std::string& out) {
    const std::string hist_path = sim_dir + "/train_series.csv";
    const std::string hist_sm_path = sim_dir + "/train_series_smoothed.csv";
    const std::string ckpt = model_dir + "/forecaster.ckpt";
    require_file(hist_path, "run the simulate stage first");
    require_file(hist_sm_path, "run the simulate stage first");
    require_file(ckpt, "run train-forecaster first");
    Manifest man{"evaluate", &cfg, {}, {}, {}};
    man.inputs[hist_path] = file_hash(hist_path);
    man.inputs[ckpt] = file_hash(ckpt);
    log("evaluate: forecaster checkpoint " + ckpt + " hash " + man.inputs[ckpt]);

    const Mode mode = cfg.mode;
    const auto model = forecast::load_model(ckpt);
    if (!model.trained) throw Error("runner", ckpt + " holds an untrained forecaster");
    const auto L = static_cast<std::size_t>(model.config().input_length);

    Scenario sc = build_scenario(cfg, derive_seed(cfg.seed, {kTrafficDay, 1}), cfg.scenario.time_warp);
    auto& net = *sc.net;
    const double frame_s = cfg.frame_s();

    std::unique_ptr<rlapps::SteeringXApp> steer;
    std::unique_ptr<rlapps::SleepingRApp> sleep;
    if (needs_steering(mode)) {
        const std::string p = apps_dir + "/steering.ckpt";
        require_file(p, "run train-apps first");
        man.inputs[p] = file_hash(p);
        steer = std::make_unique<rlapps::SteeringXApp>(steering_cfg(cfg), num_candidates(cfg));
        steer->replace_agent(rlapps::DqnAgent::load(p, "steering"));
    }
    if (needs_sleeping(mode)) {
        const std::string p = apps_dir + "/sleeping.ckpt";
        require_file(p, "run train-apps first");
        man.inputs[p] = file_hash(p);
        sleep = std::make_unique<rlapps::SleepingRApp>(sleeping_cfg(cfg, cfg.scenario.time_warp), net.num_bs());
        sleep->replace_agent(rlapps::DqnAgent::load(p, "sleeping"));
    }
    if (mode == Mode::AlwaysSteering) steer->set_active(true);
    if (mode == Mode::AlwaysSleeping) sleep->set_active(true);

    std::unique_ptr<orchestrator::Orchestrator> orch;
    if (mode == Mode::Proposed) orch = std::make_unique<orchestrator::Orchestrator>(cfg.orchestrator.thresholds, cfg.orchestrator.lead_frames);

    auto history = pipeline::read_series_csv(hist_path, cfg.scenario.network.frame_ms).values;
    const auto day0_smoothed = pipeline::read_series_csv(hist_sm_path, cfg.scenario.network.frame_ms).values;
    const std::size_t day0_len = history.size();
    if (day0_len < L) throw Error("runner", "training series is shorter than the forecaster window");

    fs::create_directories(out);
    csv::Writer kw(out + "/kpi.csv");
    write_kpi_header(kw);
    csv::Writer ow(out + "/objective.csv");
    ow.header({"frame", "S", "V", "objective_delta"});
    csv::Writer aw(out + "/app_log.csv");
    aw.header({"frame", "steering_active", "sleeping_active", "sleep_mask", "sleeping_cells"});

    const std::int64_t n = cfg.duration_frames();
    std::vector<double> volumes, predicted(static_cast<std::size_t>(n) + 1, std::nan(""));
    std::vector<orchestrator::FeedbackSample> window;
    netsim::KpiRecord prev{};
    log("evaluate: mode " + to_string(mode) + ", " + std::to_string(n) + " frames");

    for (std::int64_t f = 0; f < n; ++f) {
        if (orch) {
            const auto t = orch->advance(f);
            if (t.steering_off) steer->set_active(false);
            if (t.sleeping_off) sleep->deactivate(net);
            if (t.steering_on) steer->set_active(true);
            if (t.sleeping_on) sleep->set_active(true);
        }
        const auto d = sc.demand(f);
        if (sleep && sleep->active()) sleep->on_frame(net, sc.time_of_day(f), false);
        const auto assign = steer && steer->active() ? steer->decide(net, d, false) : net.default_assignment();
        const auto res = net.step_frame(d, assign);
        if (sleep && sleep->active()) sleep->after_frame(res, frame_s);

        write_kpi_row(kw, res.kpi, f);
        const int S = steer && steer->active() ? 1 : 0;
        const int V = sleep && sleep->active() ? 1 : 0;
        ow.row({std::to_string(f), std::to_string(S), std::to_string(V),
                csv::fmt(f == 0 ? 0.0 : orchestrator::objective_delta(prev, res.kpi, cfg.orchestrator.metrics))});
        int asleep = 0;
        for (std::size_t b = 0; b < net.num_bs(); ++b) asleep += net.active(b) ? 0 : 1;
        aw.row({std::to_string(f), std::to_string(S), std::to_string(V), std::to_string(sleep ? sleep->mask() : 0u),
                std::to_string(asleep)});
        prev = res.kpi;

        const double vol = frame_volume(cfg, res);
        volumes.push_back(vol);
        history.push_back(vol);
        const double tp = forecast::predict_next(model, causal_smooth_tail(history, L, cfg.smoothing));
        predicted[static_cast<std::size_t>(f) + 1] = tp;
        if (orch) {
            orch->submit(tp);
            if (cfg.orchestrator.adjustment.enabled) {
                window.push_back({res.kpi, S, V});
                if (static_cast<std::int64_t>(window.size()) >= cfg.orchestrator.adjustment.window_frames) {
                    orch->set_thresholds(orchestrator::adjust_thresholds(orch->thresholds(), window, cfg.orchestrator.adjustment));
                    window.clear();
                }
            }
        }
        if ((f + 1) % std::max<std::int64_t>(1, n / 10) == 0)
            log("evaluate: frame " + std::to_string(f + 1) + "/" + std::to_string(n));
    }

    kw.close();
    ow.close();
    aw.close();
    pipeline::AggregateSeries raw;
    raw.frame_length_ms = cfg.scenario.network.frame_ms;
    raw.values = volumes;
    pipeline::write_series_csv(out + "/series.csv", raw);
    const auto smoothed = pipeline::smooth(raw, cfg.smoothing);
    pipeline::write_series_csv(out + "/series_smoothed.csv", smoothed);

    // Predictions for frames 1..n-1 against the raw and smoothed evaluation series.
    const std::size_t season = static_cast<std::size_t>(cfg.frames_per_day());
    std::vector<double> y, ys, yhat, ysn, yma;
    csv::Writer pw(out + "/predictions.csv");
    pw.header({"frame", "actual", "actual_smoothed", "predicted", "seasonal_naive", "moving_average"});
    std::vector<double> sm_hist = day0_smoothed; // smoothed history for the baselines
    for (std::int64_t f = 1; f < n; ++f) {
        const auto i = static_cast<std::size_t>(f);
        // baselines see the causal smoothed history up to frame f-1
        std::vector<double> h(history.begin(), history.begin() + static_cast<std::ptrdiff_t>(day0_len + i));
        const auto tail = causal_smooth_tail(h, L, cfg.smoothing);
        const double ma = forecast::baseline_moving_average(tail, L);
        const std::size_t pos = day0_len + i; // index of frame f in the full series
        const double sn = pos >= season ? (pos - season < day0_len ? day0_smoothed[pos - season] : smoothed.values[pos - season - day0_len])
                                        : std::nan("");
        y.push_back(volumes[i]);
        ys.push_back(smoothed.values[i]);
        yhat.push_back(predicted[i]);
        ysn.push_back(sn);
        yma.push_back(ma);
        pw.row({std::to_string(f), csv::fmt(volumes[i]), csv::fmt(smoothed.values[i]), csv::fmt(predicted[i]), csv::fmt(sn), csv::fmt(ma)});
    }
    pw.close();
    csv::Writer rw(out + "/residual_stats.csv");
    rw.header({"source", "target", "n", "mean", "std", "mae", "rmse"});
    auto put = [&](const std::string& src, const std::string& tgt, const std::vector<double>& a, const std::vector<double>& p) {
        std::vector<double> aa, pp;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (std::isfinite(p[i])) {
                aa.push_back(a[i]);
                pp.push_back(p[i]);
            }
        const auto s = evalkit::residual_stats(evalkit::residuals(aa, pp, src));
        rw.row({src, tgt, std::to_string(s.n), csv::fmt(s.mean), csv::fmt(s.std), csv::fmt(s.mae), csv::fmt(s.rmse)});
        return s;
    };
    const auto ms = put("forecaster", "smoothed", ys, yhat);
    put("seasonal_naive", "smoothed", ys, ysn);
    put("moving_average", "smoothed", ys, yma);
    put("forecaster", "raw", y, yhat);
    rw.close();

    man.outputs = {"kpi.csv", "objective.csv", "app_log.csv", "series.csv", "series_smoothed.csv", "predictions.csv", "residual_stats.csv"};
    if (orch) {
        orchestrator::write_decision_log(out + "/decisions.csv", orch->log());
        man.outputs.push_back("decisions.csv");
        const auto audit = orchestrator::audit_log(orch->log(), cfg.orchestrator.lead_frames);
        man.extra["audit_violations"] = audit.violations;
        if (audit.violations > 0) log("evaluate: decision-log audit found " + std::to_string(audit.violations) + " violation(s)");
    }
    const auto agg = evalkit::aggregate(to_string(mode), evalkit::read_kpi_csv(out + "/kpi.csv"));
    log("evaluate: mean throughput " + fmt2(agg.mean_throughput_mbps) + " Mbps, EE " + fmt2(agg.mean_ee, 5) + " Mbit/J, drop " +
        fmt2(agg.mean_drop_rate, 5) + ", forecaster RMSE " + fmt2(ms.rmse));
    write_manifest(out, man);
}

// ---------------------------------------------------------------- sweep

std::vector<evalkit::SweepRow> stage_sweep(const RunConfig& cfg, const std::string& apps_dir, const std::string& out) {
    const std::string p = apps_dir + "/sleeping.ckpt";
    require_file(p, "run train-apps first");
    fs::create_directories(out);
    const auto agent_ckpt = rlapps::DqnAgent::load(p, "sleeping");
    const double frame_s = cfg.frame_s();
    const auto warm = static_cast<std::int64_t>(std::llround(cfg.eval.sweep_warmup_s / frame_s));
    const auto seg = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(cfg.eval.sweep_segment_s / frame_s)));

    std::vector<evalkit::SweepRow> rows;
    for (std::size_t i = 0; i < cfg.eval.sweep_volumes.size(); ++i) {
        const double v = cfg.eval.sweep_volumes[i];
        evalkit::SweepRow row;
        row.volume_mbps = v;
        for (int with_app = 1; with_app >= 0; --with_app) {
            Scenario sc = build_scenario(cfg, derive_seed(cfg.seed, {kSweep, i}), cfg.scenario.time_warp);
            const double base = sc.traffic->base_demand_mbps();
            sc.traffic->set_constant_multiplier(v / base);
            // time of day on the rising half of the profile where the day reaches this volume
            const auto prof = traffic::calibrate_profile(cfg.scenario.peak_mbps, cfg.scenario.trough_mbps, base, cfg.scenario.trough_time_s);
            double tod = cfg.scenario.trough_time_s;
            for (double t = 0.0; t <= 12.0 * 3600.0; t += 60.0) {
                tod = std::fmod(cfg.scenario.trough_time_s + t, traffic::kDaySeconds);
                if (prof.multiplier_at(tod) * base >= v) break;
            }
            std::unique_ptr<rlapps::SleepingRApp> app;
            if (with_app) {
                app = std::make_unique<rlapps::SleepingRApp>(sleeping_cfg(cfg, cfg.scenario.time_warp), sc.net->num_bs());
                app->replace_agent(agent_ckpt);
                app->set_active(true);
            }
            std::int64_t served = 0, dropped = 0, offered = 0;
            double ee = 0.0, tput = 0.0, asleep = 0.0;
            for (std::int64_t f = 0; f < warm + seg; ++f) {
                if (app) app->on_frame(*sc.net, tod, false);
                const auto d = sc.demand(f);
                const auto res = sc.net->step_frame(d, sc.net->default_assignment());
                if (f < warm) continue;
                for (const auto& fl : res.flows) {
                    served += fl.served_bits;
                    dropped += fl.dropped_bits;
                }
                for (auto x : d) offered += x;
                ee += res.kpi.energy_efficiency;
                tput += res.kpi.throughput_mbps;
                for (std::size_t b = 0; b < sc.net->num_bs(); ++b) asleep += sc.net->active(b) ? 0.0 : 1.0;
            }
            const double drop = served + dropped > 0 ? static_cast<double>(dropped) / static_cast<double>(served + dropped) : 0.0;
            if (with_app) {
                row.ee = ee / static_cast<double>(seg);
                row.drop_rate = drop;
                row.throughput_mbps = tput / static_cast<double>(seg);
                row.offered_mbps = static_cast<double>(offered) * 1e-6 / (static_cast<double>(seg) * frame_s);
                row.mean_sleeping = asleep / static_cast<double>(seg);
            } else {
                row.ee_awake = ee / static_cast<double>(seg);
                row.drop_rate_awake = drop;
            }
        }
        row.flagged = std::fabs(row.offered_mbps - v) > 0.1 * std::max(v, 1.0);
        log("sweep: " + fmt2(v, 0) + " Mbps -> EE " + fmt2(row.ee, 4) + " (awake " + fmt2(row.ee_awake, 4) + "), drop " + fmt2(row.drop_rate, 4) +
            ", sleeping cells " + fmt2(row.mean_sleeping, 2) + (row.flagged ? " [flagged]" : ""));
        rows.push_back(row);
    }
    evalkit::write_sweep_csv(out + "/sweep.csv", rows);
    write_manifest(out, {"sweep", &cfg, {{p, file_hash(p)}}, {"sweep.csv"}, {}});
    return rows;
}

// ---------------------------------------------------------------- compare

evalkit::ComparisonReport stage_compare(const std::vector<std::string>& dirs, const std::string& out, double bin_mbps) {
    if (dirs.empty()) throw Error("runner", "compare needs at least one evaluation directory");
    std::vector<evalkit::RunData> runs;
    Manifest man{"compare", nullptr, {}, {}, {}};
    for (const auto& d : dirs) {
        const auto m = read_manifest(d);
        if (m.value("stage", "") != "evaluate") throw Error("runner", d + " is not an evaluate stage directory");
        evalkit::RunData r;
        r.mode = m.at("mode").get<std::string>();
        r.scenario_id = m.at("scenario_id").get<std::string>();
        r.seed = m.at("seed").get<std::uint64_t>();
        require_file(d + "/kpi.csv", "evaluate output");
        require_file(d + "/series.csv", "evaluate output");
        r.kpi = evalkit::read_kpi_csv(d + "/kpi.csv");
        r.volume_mbps = pipeline::read_series_csv(d + "/series.csv").values;
        man.inputs[d + "/kpi.csv"] = file_hash(d + "/kpi.csv");
        runs.push_back(std::move(r));
    }
    auto rep = evalkit::compare_modes(runs, bin_mbps);
    const std::string pred = dirs[0] + "/predictions.csv";
    if (fs::exists(pred)) {
        const auto t = csv::read(pred);
        const auto ys = t.numeric("actual_smoothed");
        for (const char* src : {"predicted", "seasonal_naive", "moving_average"}) {
            const auto p = t.numeric(src);
            std::vector<double> a, q;
            for (std::size_t i = 0; i < p.size(); ++i)
                if (std::isfinite(p[i])) {
                    a.push_back(ys[i]);
                    q.push_back(p[i]);
                }
            rep.residuals.push_back(evalkit::residual_stats(evalkit::residuals(a, q, std::string(src) == "predicted" ? "forecaster" : src)));
        }
    }
    evalkit::write_report(out, rep);
    man.outputs = {"report.txt", "report.json", "aggregates.csv", "volume_bins.csv"};
    write_manifest(out, man);
    log(evalkit::to_text(rep));
    return rep;
}

// ---------------------------------------------------------------- replay

void stage_replay(const RunConfig& cfg, const std::string& series_csv, const std::string& model_dir, const std::string& out) {
    require_file(series_csv, "series to replay");
    const std::string ckpt = model_dir + "/forecaster.ckpt";
    require_file(ckpt, "run train-forecaster first");
    const auto model = forecast::load_model(ckpt);
    const auto L = static_cast<std::size_t>(model.config().input_length);
    const auto series = pipeline::read_series_csv(series_csv, cfg.scenario.network.frame_ms).values;
    if (series.size() <= L) throw Error("runner", "replay series is shorter than the forecaster window");
    fs::create_directories(out);

    orchestrator::Orchestrator orch(cfg.orchestrator.thresholds, cfg.orchestrator.lead_frames);
    csv::Writer pw(out + "/predictions.csv");
    pw.header({"frame", "predicted"});
    std::vector<double> hist;
    for (std::size_t f = 0; f < series.size(); ++f) {
        hist.push_back(series[f]);
        if (hist.size() < L) continue;
        orch.advance(static_cast<std::int64_t>(f));
        const double tp = forecast::predict_next(model, causal_smooth_tail(hist, L, cfg.smoothing));
        orch.submit(tp);
        pw.row({std::to_string(f + 1), csv::fmt(tp)});
    }
    pw.close();
    orchestrator::write_decision_log(out + "/decisions.csv", orch.log());
    write_manifest(out, {"replay", &cfg, {{series_csv, file_hash(series_csv)}, {ckpt, file_hash(ckpt)}}, {"predictions.csv", "decisions.csv"}, {}});
}

// ---------------------------------------------------------------- run

void stage_run(const RunConfig& cfg, const std::string& out) {
    fs::create_directories(out);
    stage_simulate(cfg, out + "/simulate");
    stage_train_forecaster(cfg, out + "/simulate", out + "/forecaster");
    stage_train_apps(cfg, out + "/apps");
    stage_evaluate(cfg, out + "/simulate", out + "/forecaster", out + "/apps", out + "/evaluate");
    Manifest man{"run", &cfg, {}, {}, {}};
    for (const char* sub : {"simulate", "forecaster", "apps", "evaluate"})
        man.inputs[std::string(sub) + "/manifest.json"] = file_hash(out + "/" + sub + "/manifest.json");
    write_manifest(out, man);
}

} // namespace ranopt::runner
