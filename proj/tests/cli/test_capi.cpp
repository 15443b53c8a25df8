#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "ranopt/ranopt.h"

namespace fs = std::filesystem;

namespace {

void collect(const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); }

} // namespace

TEST_CASE("version and decisions") {
    CHECK(std::string(ranopt_version()) == "1.0.0");
    ranopt_decision d;
    REQUIRE(ranopt_decide(230.0, 220.0, 140.0, &d) == RANOPT_OK);
    CHECK(d == RANOPT_DECISION_STEERING);
    REQUIRE(ranopt_decide(130.0, 220.0, 140.0, &d) == RANOPT_OK);
    CHECK(d == RANOPT_DECISION_SLEEPING);
    REQUIRE(ranopt_decide(220.0, 220.0, 140.0, &d) == RANOPT_OK);
    CHECK(d == RANOPT_DECISION_IDLE);
    CHECK(ranopt_decide(180.0, 140.0, 220.0, &d) == RANOPT_ERR_INVALID_ARG);
    CHECK(std::string(ranopt_last_error()).find("th_t") != std::string::npos);
    CHECK(ranopt_decide(180.0, 220.0, 140.0, nullptr) == RANOPT_ERR_INVALID_ARG);
}

TEST_CASE("config handle lifecycle") {
    ranopt_config* cfg = nullptr;
    REQUIRE(ranopt_config_default(&cfg) == RANOPT_OK);
    char h1[32], h2[32];
    REQUIRE(ranopt_config_hash(cfg, h1, sizeof h1) == RANOPT_OK);
    CHECK(std::strlen(h1) == 16);
    CHECK(ranopt_config_hash(cfg, h2, 4) != RANOPT_OK);

    REQUIRE(ranopt_config_set(cfg, "rl.steering.dqn.alpha", "0.001") == RANOPT_OK);
    double a = 0.0;
    REQUIRE(ranopt_config_get_double(cfg, "rl.steering.dqn.alpha", &a) == RANOPT_OK);
    CHECK(a == 0.001);
    REQUIRE(ranopt_config_hash(cfg, h2, sizeof h2) == RANOPT_OK);
    CHECK(std::string(h1) != std::string(h2));
    CHECK(ranopt_config_get_double(cfg, "rl.nothing", &a) == RANOPT_ERR_CONFIG);
    CHECK(ranopt_config_get_double(cfg, "mode", &a) == RANOPT_ERR_CONFIG);

    // a rejected update leaves the handle unchanged
    CHECK(ranopt_config_set(cfg, "scenario.num_uez", "3") == RANOPT_ERR_CONFIG);
    CHECK(ranopt_config_set(cfg, "orchestrator.th_t", "500") == RANOPT_ERR_CONFIG);
    char h3[32];
    REQUIRE(ranopt_config_hash(cfg, h3, sizeof h3) == RANOPT_OK);
    CHECK(std::string(h2) == std::string(h3));

    char* js = nullptr;
    REQUIRE(ranopt_config_dump(cfg, &js) == RANOPT_OK);
    CHECK(std::string(js).find("\"alpha\": 0.001") != std::string::npos);
    ranopt_string_free(js);
    ranopt_config_free(cfg);
    ranopt_config_free(nullptr);
}

TEST_CASE("config loading from files and environment") {
    const std::string f = std::string(RANOPT_SOURCE_DIR) + "/configs/ci.jsonc";
    const char* files[] = {f.c_str()};
    std::string e = "RANOPT__seed=17";
    char* env[] = {e.data(), nullptr};
    ranopt_config* cfg = nullptr;
    REQUIRE(ranopt_config_load(files, 1, env, &cfg) == RANOPT_OK);
    double v = 0.0;
    REQUIRE(ranopt_config_get_double(cfg, "seed", &v) == RANOPT_OK);
    CHECK(v == 17.0);
    REQUIRE(ranopt_config_get_double(cfg, "scenario.time_warp", &v) == RANOPT_OK);
    CHECK(v == 60.0);
    ranopt_config_free(cfg);

    const char* missing[] = {"/nonexistent/x.jsonc"};
    cfg = reinterpret_cast<ranopt_config*>(0x1);
    CHECK(ranopt_config_load(missing, 1, nullptr, &cfg) != RANOPT_OK);
    CHECK(cfg == nullptr);
    CHECK(ranopt_config_load(nullptr, 1, nullptr, &cfg) == RANOPT_ERR_INVALID_ARG);
}

TEST_CASE("stage errors map to status codes") {
    ranopt_config* cfg = nullptr;
    REQUIRE(ranopt_config_default(&cfg) == RANOPT_OK);
    std::vector<std::string> lines;
    ranopt_set_log_callback(collect, &lines);
    const auto tmp = fs::temp_directory_path() / "ranopt_capi_missing";
    fs::remove_all(tmp);
    CHECK(ranopt_train_forecaster(cfg, (tmp / "sim").c_str(), (tmp / "fc").c_str()) == RANOPT_ERR_MISSING_ARTIFACT);
    CHECK(std::string(ranopt_last_error()).find("train_series") != std::string::npos);
    CHECK(ranopt_evaluate(cfg, nullptr, "a", "b", "c") == RANOPT_ERR_INVALID_ARG);
    const char* dirs[] = {(tmp / "nothing").c_str()};
    CHECK(ranopt_compare(dirs, 1, (tmp / "cmp").c_str(), 0.0) == RANOPT_ERR_MISSING_ARTIFACT);
    CHECK(ranopt_compare(nullptr, 0, "x", 0.0) == RANOPT_ERR_INVALID_ARG);
    ranopt_set_log_callback(nullptr, nullptr);
    ranopt_config_free(cfg);
}

TEST_CASE("simulate stage through the C interface") {
    ranopt_config* cfg = nullptr;
    REQUIRE(ranopt_config_default(&cfg) == RANOPT_OK);
    REQUIRE(ranopt_config_set(cfg, "scenario.time_warp", "240") == RANOPT_OK);
    std::vector<std::string> lines;
    ranopt_set_log_callback(collect, &lines);
    const auto out = fs::temp_directory_path() / "ranopt_capi_sim";
    fs::remove_all(out);
    REQUIRE_MESSAGE(ranopt_simulate(cfg, out.c_str()) == RANOPT_OK, ranopt_last_error());
    CHECK(std::string(ranopt_last_error()).empty());
    CHECK(fs::exists(out / "train_series.csv"));
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(!lines.empty());
    ranopt_set_log_callback(nullptr, nullptr);
    ranopt_config_free(cfg);
}
