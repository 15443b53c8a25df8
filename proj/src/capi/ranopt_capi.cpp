#include "ranopt/ranopt.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "orchestrator/orchestrator.hpp"
#include "runner/config.hpp"
#include "runner/runner.hpp"

using namespace ranopt;

struct ranopt_config {
    runner::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

ranopt_status fail(ranopt_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

bool is_io_message(const std::string& m) {
    return m.find("cannot read") != std::string::npos || m.find("cannot write") != std::string::npos ||
           m.find("cannot open") != std::string::npos;
}

template <class F>
ranopt_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return RANOPT_OK;
    } catch (const MissingArtifact& e) {
        return fail(RANOPT_ERR_MISSING_ARTIFACT, e.what());
    } catch (const ConstraintViolation& e) {
        return fail(RANOPT_ERR_CONSTRAINT, e.what());
    } catch (const NumericError& e) {
        return fail(RANOPT_ERR_NUMERIC, e.what());
    } catch (const Error& e) {
        if (e.module() == "config") return fail(RANOPT_ERR_CONFIG, e.what());
        if (e.module() == "io" || is_io_message(e.what())) return fail(RANOPT_ERR_IO, e.what());
        return fail(RANOPT_ERR_INTERNAL, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(RANOPT_ERR_IO, std::string("io: ") + e.what());
    } catch (const std::exception& e) {
        return fail(RANOPT_ERR_INTERNAL, std::string("internal: ") + e.what());
    } catch (...) {
        return fail(RANOPT_ERR_INTERNAL, "internal: unknown exception");
    }
}

#define REQUIRE_ARG(cond, name)                                                         \
    do {                                                                                \
        if (!(cond)) return fail(RANOPT_ERR_INVALID_ARG, "invalid argument: " name);    \
    } while (0)

} // namespace

extern "C" {

const char* ranopt_version(void) { return runner::version(); }

const char* ranopt_last_error(void) { return g_last_error.c_str(); }

void ranopt_set_log_callback(ranopt_log_fn fn, void* user) {
    if (!fn) {
        runner::set_logger([](const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); });
        return;
    }
    runner::set_logger([fn, user](const std::string& m) { fn(m.c_str(), user); });
}

ranopt_status ranopt_config_default(ranopt_config** out) {
    REQUIRE_ARG(out, "out");
    return guarded([&] { *out = new ranopt_config{}; });
}

ranopt_status ranopt_config_load(const char* const* files, size_t num_files, char** envp, ranopt_config** out) {
    REQUIRE_ARG(out, "out");
    REQUIRE_ARG(files || num_files == 0, "files");
    *out = nullptr;
    return guarded([&] {
        std::vector<std::string> fs;
        for (size_t i = 0; i < num_files; ++i) {
            if (!files[i]) throw Error("config", "null config path");
            fs.emplace_back(files[i]);
        }
        auto c = runner::load(fs, envp);
        *out = new ranopt_config{std::move(c)};
    });
}

ranopt_status ranopt_config_set(ranopt_config* cfg, const char* path, const char* value) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(path && *path, "path");
    REQUIRE_ARG(value, "value");
    return guarded([&] {
        auto j = runner::to_json(cfg->cfg);
        runner::set_path(j, path, value);
        cfg->cfg = runner::from_json(j);
    });
}

ranopt_status ranopt_config_dump(const ranopt_config* cfg, char** json_out) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(json_out, "json_out");
    return guarded([&] {
        const auto s = runner::to_json(cfg->cfg).dump(2);
        char* p = new char[s.size() + 1];
        std::memcpy(p, s.c_str(), s.size() + 1);
        *json_out = p;
    });
}

ranopt_status ranopt_config_get_double(const ranopt_config* cfg, const char* path, double* out) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(path && *path, "path");
    REQUIRE_ARG(out, "out");
    return guarded([&] {
        const auto j = runner::to_json(cfg->cfg);
        const nlohmann::json* node = &j;
        std::string p = path;
        std::size_t start = 0;
        while (true) {
            const auto dot = p.find('.', start);
            const auto key = p.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!node->is_object() || !node->contains(key)) throw Error("config", "unknown key " + p);
            node = &node->at(key);
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        if (!node->is_number()) throw Error("config", p + " is not a number");
        *out = node->get<double>();
    });
}

ranopt_status ranopt_config_hash(const ranopt_config* cfg, char* buf, size_t buf_len) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(buf, "buf");
    return guarded([&] {
        const auto h = runner::config_hash(cfg->cfg);
        if (buf_len < h.size() + 1) throw Error("capi", "hash buffer too small");
        std::memcpy(buf, h.c_str(), h.size() + 1);
    });
}

void ranopt_config_free(ranopt_config* cfg) { delete cfg; }

void ranopt_string_free(char* s) { delete[] s; }

ranopt_status ranopt_simulate(const ranopt_config* cfg, const char* out_dir) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(out_dir, "out_dir");
    return guarded([&] { runner::stage_simulate(cfg->cfg, out_dir); });
}

ranopt_status ranopt_train_forecaster(const ranopt_config* cfg, const char* sim_dir, const char* out_dir) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(sim_dir && out_dir, "directory");
    return guarded([&] { runner::stage_train_forecaster(cfg->cfg, sim_dir, out_dir); });
}

ranopt_status ranopt_train_apps(const ranopt_config* cfg, const char* out_dir, int all) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(out_dir, "out_dir");
    return guarded([&] { runner::stage_train_apps(cfg->cfg, out_dir, all != 0); });
}

ranopt_status ranopt_evaluate(const ranopt_config* cfg, const char* sim_dir, const char* model_dir, const char* apps_dir,
                              const char* out_dir) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(sim_dir && model_dir && apps_dir && out_dir, "directory");
    return guarded([&] { runner::stage_evaluate(cfg->cfg, sim_dir, model_dir, apps_dir, out_dir); });
}

ranopt_status ranopt_sweep(const ranopt_config* cfg, const char* apps_dir, const char* out_dir) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(apps_dir && out_dir, "directory");
    return guarded([&] { runner::stage_sweep(cfg->cfg, apps_dir, out_dir); });
}

ranopt_status ranopt_compare(const char* const* run_dirs, size_t num_dirs, const char* out_dir, double bin_mbps) {
    REQUIRE_ARG(run_dirs && num_dirs > 0, "run_dirs");
    REQUIRE_ARG(out_dir, "out_dir");
    return guarded([&] {
        std::vector<std::string> d;
        for (size_t i = 0; i < num_dirs; ++i) {
            if (!run_dirs[i]) throw Error("capi", "null run directory");
            d.emplace_back(run_dirs[i]);
        }
        runner::stage_compare(d, out_dir, bin_mbps > 0.0 ? bin_mbps : 20.0);
    });
}

ranopt_status ranopt_replay(const ranopt_config* cfg, const char* series_csv, const char* model_dir, const char* out_dir) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(series_csv && model_dir && out_dir, "path");
    return guarded([&] { runner::stage_replay(cfg->cfg, series_csv, model_dir, out_dir); });
}

ranopt_status ranopt_run(const ranopt_config* cfg, const char* out_dir) {
    REQUIRE_ARG(cfg, "cfg");
    REQUIRE_ARG(out_dir, "out_dir");
    return guarded([&] { runner::stage_run(cfg->cfg, out_dir); });
}

ranopt_status ranopt_decide(double predicted_mbps, double th_p, double th_t, ranopt_decision* out) {
    REQUIRE_ARG(out, "out");
    REQUIRE_ARG(std::isfinite(predicted_mbps), "predicted_mbps");
    REQUIRE_ARG(std::isfinite(th_p) && std::isfinite(th_t) && th_t < th_p, "th_t < th_p");
    return guarded([&] {
        orchestrator::Thresholds th{th_p, th_t};
        switch (orchestrator::decide(predicted_mbps, th)) {
        case orchestrator::Decision::ActivateSteering: *out = RANOPT_DECISION_STEERING; break;
        case orchestrator::Decision::ActivateSleeping: *out = RANOPT_DECISION_SLEEPING; break;
        default: *out = RANOPT_DECISION_IDLE;
        }
    });
}

} // extern "C"
