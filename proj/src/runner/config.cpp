#include "runner/config.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "common/hash.hpp"

namespace ranopt::runner {

using nlohmann::json;

std::string to_string(Mode m) {
    switch (m) {
    case Mode::Proposed: return "proposed";
    case Mode::AlwaysSteering: return "always_steering";
    case Mode::AlwaysSleeping: return "always_sleeping";
    case Mode::NoApp: return "no_app";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    if (s == "proposed") return Mode::Proposed;
    if (s == "always_steering") return Mode::AlwaysSteering;
    if (s == "always_sleeping") return Mode::AlwaysSleeping;
    if (s == "no_app") return Mode::NoApp;
    throw Error("config", "unknown mode '" + s + "' (proposed | always_steering | always_sleeping | no_app)");
}

namespace {

std::string edge_name(pipeline::EdgeMode e) { return e == pipeline::EdgeMode::Mirror ? "mirror" : "interp"; }
pipeline::EdgeMode edge_from(const std::string& s) {
    if (s == "mirror") return pipeline::EdgeMode::Mirror;
    if (s == "interp") return pipeline::EdgeMode::Interp;
    throw Error("config", "unknown edge mode '" + s + "' (mirror | interp)");
}

// Value codecs. Enums travel as strings.
json enc(const traffic::TrafficClass& v) { return traffic::to_string(v); }
json enc(const traffic::ArrivalKind& v) { return traffic::to_string(v); }
json enc(const Mode& v) { return to_string(v); }
json enc(const pipeline::EdgeMode& v) { return edge_name(v); }
json enc(const rlapps::SleepReward& v) { return rlapps::to_string(v); }
json enc(const std::vector<traffic::TrafficClass>& v) {
    json a = json::array();
    for (auto c : v) a.push_back(traffic::to_string(c));
    return a;
}
template <class T>
json enc(const T& v) {
    return json(v);
}

void dec(const json& j, traffic::TrafficClass& v) { v = traffic::class_from_string(j.get<std::string>()); }
void dec(const json& j, traffic::ArrivalKind& v) { v = traffic::arrival_from_string(j.get<std::string>()); }
void dec(const json& j, Mode& v) { v = mode_from_string(j.get<std::string>()); }
void dec(const json& j, pipeline::EdgeMode& v) { v = edge_from(j.get<std::string>()); }
void dec(const json& j, rlapps::SleepReward& v) { v = rlapps::sleep_reward_from_string(j.get<std::string>()); }
void dec(const json& j, std::vector<traffic::TrafficClass>& v) {
    if (!j.is_array()) throw Error("config", "expected an array of class names");
    v.clear();
    for (const auto& e : j) v.push_back(traffic::class_from_string(e.get<std::string>()));
}
template <class T>
void dec(const json& j, T& v) {
    v = j.get<T>();
}

struct Writer {
    json& j;
    template <class T>
    void operator()(const char* k, T& v) {
        j[k] = enc(v);
    }
    template <class F>
    void obj(const char* k, F&& f) {
        json sub = json::object();
        Writer w{sub};
        f(w);
        j[k] = std::move(sub);
    }
    template <class T, class F>
    void list(const char* k, std::vector<T>& v, F&& f) {
        json a = json::array();
        for (auto& e : v) {
            json sub = json::object();
            Writer w{sub};
            f(w, e);
            a.push_back(std::move(sub));
        }
        j[k] = std::move(a);
    }
};

struct Reader {
    const json& j;
    std::string path;
    std::set<std::string> seen{};

    template <class T>
    void operator()(const char* k, T& v) {
        if (!j.contains(k)) return;
        seen.insert(k);
        try {
            dec(j.at(k), v);
        } catch (const json::exception& e) {
            throw Error("config", "bad value for " + path + k + ": " + e.what());
        } catch (const Error& e) {
            throw Error("config", path + k + ": " + e.what());
        }
    }
    template <class F>
    void obj(const char* k, F&& f) {
        if (!j.contains(k)) return;
        seen.insert(k);
        const json& s = j.at(k);
        if (!s.is_object()) throw Error("config", path + k + " must be an object");
        Reader r{s, path + k + "."};
        f(r);
        r.finish();
    }
    template <class T, class F>
    void list(const char* k, std::vector<T>& v, F&& f) {
        if (!j.contains(k)) return;
        seen.insert(k);
        const json& a = j.at(k);
        if (!a.is_array()) throw Error("config", path + k + " must be an array");
        v.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_object()) throw Error("config", path + k + "[" + std::to_string(i) + "] must be an object");
            T e{};
            Reader r{a[i], path + k + "[" + std::to_string(i) + "]."};
            f(r, e);
            r.finish();
            v.push_back(std::move(e));
        }
    }
    void finish() const {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!seen.count(it.key())) throw Error("config", "unknown key " + path + it.key());
    }
};

template <class A>
void visit_class(A& a, traffic::TrafficClassSpec& s) {
    a("name", s.name);
    a("arrival", s.arrival);
    a("mean_interarrival_ms", s.mean_interarrival_ms);
    a("packet_size_bytes", s.packet_size_bytes);
    a("qos_throughput_mbps", s.qos_throughput_mbps);
    a("qos_delay_budget_ms", s.qos_delay_budget_ms);
    a("pareto_shape", s.pareto_shape);
    a("uniform_half_width", s.uniform_half_width);
}

template <class A>
void visit_station(A& a, StationTemplate& s) {
    a("bandwidth_mhz", s.bandwidth_mhz);
    a("carrier_ghz", s.carrier_ghz);
    a("max_tx_dbm", s.max_tx_dbm);
    a.obj("power", [&](auto& p) {
        p("p_fixed_w", s.power.p_fixed_w);
        p("tx_slope", s.power.tx_slope);
        p("p_sleep_w", s.power.p_sleep_w);
    });
}

template <class A>
void visit_pathloss(A& a, netsim::PathlossParams& p) {
    a("pl0_db", p.pl0_db);
    a("exponent", p.exponent);
    a("d0_m", p.d0_m);
}

template <class A>
void visit_dqn(A& a, rlapps::DqnConfig& d) {
    a("gamma", d.gamma);
    a("alpha", d.alpha);
    a("batch_size", d.batch_size);
    a("initial_explore_steps", d.initial_explore_steps);
    a("target_sync_every", d.target_sync_every);
    a.obj("epsilon", [&](auto& e) {
        e("start", d.epsilon.start);
        e("end", d.epsilon.end);
        e("decay_steps", d.epsilon.decay_steps);
    });
    a("buffer_capacity", d.buffer_capacity);
    a("hidden_dims", d.hidden_dims);
    a("grad_clip", d.grad_clip);
    a("train_every", d.train_every);
    a("seed", d.seed);
}

template <class A>
void visit(A& a, RunConfig& c) {
    a("schema_version", c.schema_version);
    a("mode", c.mode);
    a("seed", c.seed);
    a("duration_s", c.duration_s);
    a.obj("scenario", [&](auto& s) {
        auto& sc = c.scenario;
        s("num_ues", sc.num_ues);
        s("ue_radius_m", sc.ue_radius_m);
        s("small_offset_m", sc.small_offset_m);
        s("flow_classes", sc.flow_classes);
        std::vector<traffic::TrafficClassSpec> table(sc.traffic_table.begin(), sc.traffic_table.end());
        s.list("traffic_table", table, [](auto& e, traffic::TrafficClassSpec& t) { visit_class(e, t); });
        if constexpr (std::is_same_v<A, Reader>) {
            if (table.size() != traffic::kNumClasses) throw Error("config", "scenario.traffic_table must list video, gaming and voice");
            std::array<bool, traffic::kNumClasses> have{};
            for (const auto& t : table) {
                const auto i = static_cast<std::size_t>(t.name);
                if (have[i]) throw Error("config", "scenario.traffic_table lists " + traffic::to_string(t.name) + " twice");
                have[i] = true;
                sc.traffic_table[i] = t;
            }
        }
        s("peak_mbps", sc.peak_mbps);
        s("trough_mbps", sc.trough_mbps);
        s("trough_time_s", sc.trough_time_s);
        s("time_warp", sc.time_warp);
        s("noise_sigma", sc.noise_sigma);
        s("noise_knot_s", sc.noise_knot_s);
        s.obj("macro", [&](auto& m) { visit_station(m, sc.macro); });
        s.obj("small", [&](auto& m) { visit_station(m, sc.small); });
        s.obj("radio", [&](auto& r) {
            r("noise_figure_db", sc.radio.noise_figure_db);
            r("efficiency", sc.radio.efficiency);
            r("max_sinr_db", sc.radio.max_sinr_db);
            r("interference", sc.radio.interference);
            r("load_coupled", sc.radio.load_coupled);
            r("nr_min_sinr_db", sc.radio.nr_min_sinr_db);
            r("small_candidates", sc.radio.small_candidates);
            r.obj("urban_macro", [&](auto& p) { visit_pathloss(p, sc.radio.urban_macro); });
            r.obj("urban_micro", [&](auto& p) { visit_pathloss(p, sc.radio.urban_micro); });
        });
        s.obj("network", [&](auto& n) {
            n("frame_ms", sc.network.frame_ms);
            n("slot_ms", sc.network.slot_ms);
            n("overload_threshold", sc.network.overload_threshold);
        });
    });
    a.obj("smoothing", [&](auto& s) {
        s("window", c.smoothing.window);
        s("poly_order", c.smoothing.poly_order);
        s("edges", c.smoothing.edges);
    });
    a.obj("forecaster", [&](auto& f) {
        auto& m = c.forecaster.model;
        f.obj("model", [&](auto& x) {
            x("input_length", m.input_length);
            x("horizon", m.horizon);
            x("label_length", m.label_length);
            x("d_model", m.d_model);
            x("heads", m.heads);
            x("d_ff", m.d_ff);
            x("encoder_layers", m.encoder_layers);
            x("decoder_layers", m.decoder_layers);
            x("ma_kernel", m.ma_kernel);
            x("autocorr_rho", m.autocorr.rho);
            x("positional_embedding", m.positional_embedding);
        });
        auto& t = c.forecaster.train;
        f.obj("train", [&](auto& x) {
            x("learning_rate", t.learning_rate);
            x("batch_size", t.batch_size);
            x("epochs", t.epochs);
            x("seed", t.seed);
            x("grad_clip", t.grad_clip);
            x("max_samples_per_epoch", t.max_samples_per_epoch);
            x("evaluate_test", t.evaluate_test);
            x("divergence_factor", t.divergence_factor);
        });
        f("train_fraction", c.forecaster.train_fraction);
    });
    a.obj("rl", [&](auto& r) {
        r.obj("steering", [&](auto& s) {
            s("w_t", c.rl.steering.w_t);
            s("w_d", c.rl.steering.w_d);
            s("load_clip", c.rl.steering.load_clip);
            s("sinr_min_db", c.rl.steering.sinr_min_db);
            s("sinr_max_db", c.rl.steering.sinr_max_db);
            s("min_link_sinr_db", c.rl.steering.min_link_sinr_db);
            s.obj("dqn", [&](auto& d) { visit_dqn(d, c.rl.steering.dqn); });
        });
        r.obj("sleeping", [&](auto& s) {
            s("lambda", c.rl.sleeping.lambda);
            s("epoch_frames", c.rl.sleeping.epoch_frames);
            s("reward", c.rl.sleeping.reward);
            s("load_clip", c.rl.sleeping.load_clip);
            s("queue_scale_mbit", c.rl.sleeping.queue_scale_mbit);
            s.obj("dqn", [&](auto& d) { visit_dqn(d, c.rl.sleeping.dqn); });
        });
        r("train_time_warp", c.rl.train_time_warp);
        r("steering_days", c.rl.steering_days);
        r("sleeping_days", c.rl.sleeping_days);
    });
    a.obj("orchestrator", [&](auto& o) {
        o("th_p", c.orchestrator.thresholds.th_p);
        o("th_t", c.orchestrator.thresholds.th_t);
        o("lead_frames", c.orchestrator.lead_frames);
        auto& p = c.orchestrator.adjustment;
        o.obj("adjustment", [&](auto& x) {
            x("enabled", p.enabled);
            x("delta", p.delta);
            x("window_frames", p.window_frames);
            x("drop_target", p.drop_target);
            x("ee_target", p.ee_target);
            x("margin", p.margin);
        });
        o.list("metrics", c.orchestrator.metrics, [](auto& e, orchestrator::MetricScale& m) {
            e("name", m.name);
            e("scale", m.scale);
        });
    });
    a.obj("eval", [&](auto& e) {
        e("sweep_volumes", c.eval.sweep_volumes);
        e("sweep_segment_s", c.eval.sweep_segment_s);
        e("sweep_warmup_s", c.eval.sweep_warmup_s);
        e("bin_mbps", c.eval.bin_mbps);
    });
}

} // namespace

json to_json(const RunConfig& cfg) {
    RunConfig c = cfg;
    json j = json::object();
    Writer w{j};
    visit(w, c);
    return j;
}

namespace {

RunConfig parse_strict(const json& j) {
    if (!j.is_object()) throw Error("config", "configuration must be a JSON object");
    if (j.contains("schema_version")) {
        if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion)
            throw Error("config", "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    }
    RunConfig c;
    Reader r{j, ""};
    visit(r, c);
    r.finish();
    return c;
}

} // namespace

RunConfig from_json(const json& j) {
    RunConfig c = parse_strict(j);
    c.validate();
    return c;
}

std::int64_t RunConfig::frames_per_day(double warp) const {
    return static_cast<std::int64_t>(std::llround(traffic::kDaySeconds / warp / frame_s()));
}

std::int64_t RunConfig::duration_frames() const { return static_cast<std::int64_t>(std::llround(duration_s / frame_s())); }

int RunConfig::sleep_epoch_frames(double warp) const {
    if (rl.sleeping.epoch_frames > 0) return rl.sleeping.epoch_frames;
    return std::max(1, static_cast<int>(std::lround(60.0 / warp / frame_s())));
}

void RunConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error("config", m); };
    if (schema_version != kSchemaVersion) bad("unsupported schema_version");
    if (!(duration_s > 0.0)) bad("duration_s must be positive");
    const auto& s = scenario;
    if (s.num_ues < 1) bad("scenario.num_ues must be >= 1");
    if (!(s.ue_radius_m > 0.0)) bad("scenario.ue_radius_m must be positive");
    if (s.flow_classes.empty()) bad("scenario.flow_classes must not be empty");
    for (const auto& t : s.traffic_table) {
        try {
            t.validate();
        } catch (const std::exception& e) {
            bad(std::string("scenario.traffic_table: ") + e.what());
        }
    }
    if (!(s.trough_mbps > 0.0) || s.peak_mbps < s.trough_mbps) bad("scenario needs 0 < trough_mbps <= peak_mbps");
    if (!(s.time_warp > 0.0)) bad("scenario.time_warp must be positive");
    if (!(s.noise_sigma >= 0.0)) bad("scenario.noise_sigma must be >= 0");
    if (!(s.noise_knot_s > 0.0)) bad("scenario.noise_knot_s must be positive");
    for (const auto* st : {&s.macro, &s.small}) {
        if (!(st->bandwidth_mhz > 0.0) || !(st->carrier_ghz > 0.0)) bad("station bandwidth and carrier must be positive");
        if (!(st->power.p_sleep_w < st->power.p_fixed_w)) bad("station p_sleep_w must be below p_fixed_w");
    }
    if (!(s.network.frame_ms > 0.0) || !(s.network.slot_ms > 0.0)) bad("network frame_ms and slot_ms must be positive");
    const double spf = s.network.frame_ms / s.network.slot_ms;
    if (std::fabs(spf - std::round(spf)) > 1e-9) bad("network.frame_ms must be a multiple of slot_ms");
    if (s.radio.small_candidates < 1 || s.radio.small_candidates > 4) bad("radio.small_candidates must be within 1..4");
    try {
        smoothing.validate();
        forecaster.model.validate();
        forecaster.train.validate();
        rl.steering.dqn.validate();
        rl.sleeping.dqn.validate();
        orchestrator.thresholds.validate();
        orchestrator.adjustment.validate();
    } catch (const Error& e) {
        bad(e.what());
    }
    if (!(forecaster.train_fraction > 0.0 && forecaster.train_fraction <= 1.0)) bad("forecaster.train_fraction must lie in (0, 1]");
    if (orchestrator.lead_frames < 1) bad("orchestrator.lead_frames must be >= 1");
    for (const auto& m : orchestrator.metrics) {
        netsim::KpiRecord k;
        try {
            (void)orchestrator::metric_value(k, m.name);
        } catch (const Error& e) {
            bad(e.what());
        }
        if (m.scale == 0.0) bad("orchestrator metric scale must be non-zero");
    }
    if (!(rl.train_time_warp > 0.0)) bad("rl.train_time_warp must be positive");
    if (rl.steering_days < 0 || rl.sleeping_days < 0) bad("rl training days must be >= 0");
    if (rl.sleeping.epoch_frames < 0) bad("rl.sleeping.epoch_frames must be >= 0");
    if (!(eval.sweep_segment_s > 0.0) || eval.sweep_warmup_s < 0.0) bad("eval sweep segment must be positive");
    for (std::size_t i = 1; i < eval.sweep_volumes.size(); ++i)
        if (eval.sweep_volumes[i] < eval.sweep_volumes[i - 1]) bad("eval.sweep_volumes must be sorted");
    for (double v : eval.sweep_volumes)
        if (v < 0.0) bad("eval.sweep_volumes must be non-negative");
    if (!(eval.bin_mbps > 0.0)) bad("eval.bin_mbps must be positive");
    if (frames_per_day() < forecaster.model.input_length + 2) bad("a profile day is shorter than the forecaster input window");
}

void merge(json& base, const json& overlay) {
    if (!base.is_object() || !overlay.is_object()) {
        base = overlay;
        return;
    }
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object()) merge(base[it.key()], it.value());
        else base[it.key()] = it.value();
    }
}

json read_jsonc(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("config", "cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return json::parse(ss.str(), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw Error("config", "syntax error in " + path + ": " + e.what());
    }
}

void set_path(json& j, const std::string& dotted, const std::string& text) {
    if (dotted.empty()) throw Error("config", "empty override key");
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw Error("config", "malformed override key '" + dotted + "'");
        if (!node->is_object()) throw Error("config", "override '" + dotted + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

std::vector<std::string> apply_env(json& j, char** envp) {
    std::vector<std::string> applied;
    if (!envp) return applied;
    const std::size_t plen = std::strlen(kEnvPrefix);
    std::vector<std::pair<std::string, std::string>> entries;
    for (char** e = envp; *e; ++e) {
        const std::string kv = *e;
        if (kv.compare(0, plen, kEnvPrefix) != 0) continue;
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        std::string key = kv.substr(plen, eq - plen);
        std::string dotted;
        for (std::size_t i = 0; i < key.size(); ++i) {
            if (key.compare(i, 2, "__") == 0) {
                dotted += '.';
                ++i;
            } else {
                dotted += key[i];
            }
        }
        entries.emplace_back(dotted, kv.substr(eq + 1));
    }
    std::sort(entries.begin(), entries.end());
    for (const auto& [k, v] : entries) {
        set_path(j, k, v);
        applied.push_back(k);
    }
    return applied;
}

RunConfig load(const std::vector<std::string>& files, char** envp) {
    json j = to_json(RunConfig{});
    for (const auto& f : files) {
        const json o = read_jsonc(f);
        if (!o.is_object()) throw Error("config", f + " must hold a JSON object");
        // report unknown keys and bad types against the file that holds them
        json probe = to_json(RunConfig{});
        merge(probe, o);
        try {
            (void)parse_strict(probe);
        } catch (const Error& e) {
            throw Error("config", f + ": " + e.what());
        }
        merge(j, o);
    }
    apply_env(j, envp);
    return from_json(j);
}

std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

std::string scenario_id(const RunConfig& c) {
    const json full = to_json(c);
    const json j = {{"scenario", full.at("scenario")}, {"seed", full.at("seed")}, {"duration_s", full.at("duration_s")}};
    return hex64(fnv1a64(j.dump()));
}

} // namespace ranopt::runner
