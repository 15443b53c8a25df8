#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ranopt/ranopt.h"

extern char** environ;

namespace {

int report(ranopt_status s) {
    if (s != RANOPT_OK) std::fprintf(stderr, "error: %s\n", ranopt_last_error());
    return static_cast<int>(s);
}

void quiet_log(const char*, void*) {}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ranopt: prediction-led traffic steering and cell sleeping simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(ranopt_version()));

    std::vector<std::string> configs, sets;
    std::string mode, out;
    long long seed = -1;
    double duration = -1.0;
    bool quiet = false, no_env = false;
    app.add_option("--config", configs, "JSONC config file(s), applied in order over the defaults")->check(CLI::ExistingFile);
    app.add_option("--mode", mode, "proposed | always_steering | always_sleeping | no_app");
    app.add_option("--seed", seed, "Run seed")->check(CLI::NonNegativeNumber);
    app.add_option("--duration", duration, "Evaluation duration in simulated seconds")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "Output directory");
    app.add_option("--set", sets, "Override a config value: dotted.path=value");
    app.add_flag("--quiet", quiet, "No progress output");
    app.add_flag("--no-env", no_env, "Ignore RANOPT__* environment overrides");

    std::string sim_dir, model_dir, apps_dir, series;
    std::vector<std::string> run_dirs;
    double bin = 0.0;
    bool all_apps = false;

    auto* simulate = app.add_subcommand("simulate", "Simulate the NoApp training day and write its volume series");
    auto* train_fc = app.add_subcommand("train-forecaster", "Train the forecaster on a simulated series");
    train_fc->add_option("--sim", sim_dir, "simulate output directory")->required();
    auto* train_apps = app.add_subcommand("train-apps", "Train the DQN apps needed by --mode");
    train_apps->add_flag("--all", all_apps, "Train both apps regardless of mode");
    auto* evaluate = app.add_subcommand("evaluate", "Run the evaluation day under --mode");
    evaluate->add_option("--sim", sim_dir, "simulate output directory")->required();
    evaluate->add_option("--model", model_dir, "train-forecaster output directory")->required();
    evaluate->add_option("--apps", apps_dir, "train-apps output directory")->required();
    auto* sweep = app.add_subcommand("sweep", "Fixed-volume segments with and without the sleeping rApp");
    sweep->add_option("--apps", apps_dir, "train-apps output directory")->required();
    auto* compare = app.add_subcommand("compare", "Compare evaluation directories of different modes");
    compare->add_option("runs", run_dirs, "evaluate output directories; the first is the reference")->required();
    compare->add_option("--bin", bin, "Volume bin width in Mbps (default from config)");
    auto* replay = app.add_subcommand("replay", "Prediction and orchestration over a recorded series");
    replay->add_option("--series", series, "Series CSV (frame_index,mbps)")->required()->check(CLI::ExistingFile);
    replay->add_option("--model", model_dir, "train-forecaster output directory")->required();
    auto* run = app.add_subcommand("run", "All stages under one directory");
    auto* show = app.add_subcommand("show-config", "Print the effective configuration");
    for (auto* s : {simulate, train_fc, train_apps, evaluate, sweep, compare, replay, run, show}) s->fallthrough();

    CLI11_PARSE(app, argc, argv);

    if (quiet) ranopt_set_log_callback(quiet_log, nullptr);

    std::vector<const char*> files;
    for (const auto& c : configs) files.push_back(c.c_str());
    ranopt_config* cfg = nullptr;
    if (auto s = ranopt_config_load(files.data(), files.size(), no_env ? nullptr : environ, &cfg); s != RANOPT_OK) return report(s);

    auto set = [&](const std::string& path, const std::string& value) -> ranopt_status {
        return ranopt_config_set(cfg, path.c_str(), value.c_str());
    };
    ranopt_status st = RANOPT_OK;
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "error: --set expects path=value, got '%s'\n", kv.c_str());
            ranopt_config_free(cfg);
            return RANOPT_ERR_INVALID_ARG;
        }
        if ((st = set(kv.substr(0, eq), kv.substr(eq + 1))) != RANOPT_OK) break;
    }
    if (st == RANOPT_OK && !mode.empty()) st = set("mode", "\"" + mode + "\"");
    if (st == RANOPT_OK && seed >= 0) st = set("seed", std::to_string(seed));
    if (st == RANOPT_OK && duration > 0) st = set("duration_s", std::to_string(duration));
    if (st != RANOPT_OK) {
        const int rc = report(st);
        ranopt_config_free(cfg);
        return rc;
    }

    const std::string o = out.empty() ? std::string("out") : out;
    if (*show) {
        char* js = nullptr;
        st = ranopt_config_dump(cfg, &js);
        if (st == RANOPT_OK) {
            std::printf("%s\n", js);
            ranopt_string_free(js);
        }
    } else if (*simulate) {
        st = ranopt_simulate(cfg, o.c_str());
    } else if (*train_fc) {
        st = ranopt_train_forecaster(cfg, sim_dir.c_str(), o.c_str());
    } else if (*train_apps) {
        st = ranopt_train_apps(cfg, o.c_str(), all_apps ? 1 : 0);
    } else if (*evaluate) {
        st = ranopt_evaluate(cfg, sim_dir.c_str(), model_dir.c_str(), apps_dir.c_str(), o.c_str());
    } else if (*sweep) {
        st = ranopt_sweep(cfg, apps_dir.c_str(), o.c_str());
    } else if (*compare) {
        std::vector<const char*> d;
        for (const auto& r : run_dirs) d.push_back(r.c_str());
        if (bin <= 0.0) st = ranopt_config_get_double(cfg, "eval.bin_mbps", &bin);
        if (st == RANOPT_OK) st = ranopt_compare(d.data(), d.size(), o.c_str(), bin);
    } else if (*replay) {
        st = ranopt_replay(cfg, series.c_str(), model_dir.c_str(), o.c_str());
    } else if (*run) {
        st = ranopt_run(cfg, o.c_str());
    }
    ranopt_config_free(cfg);
    return report(st);
}
