#ifndef RANOPT_RANOPT_H
#define RANOPT_RANOPT_H

#include <stddef.h>

#if defined(_WIN32)
#define RANOPT_API __declspec(dllexport)
#else
#define RANOPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ranopt_status {
    RANOPT_OK = 0,
    RANOPT_ERR_INVALID_ARG = 1,
    RANOPT_ERR_CONFIG = 2,
    RANOPT_ERR_IO = 3,
    RANOPT_ERR_MISSING_ARTIFACT = 4,
    RANOPT_ERR_CONSTRAINT = 5,
    RANOPT_ERR_NUMERIC = 6,
    RANOPT_ERR_INTERNAL = 7
} ranopt_status;

typedef enum ranopt_decision {
    RANOPT_DECISION_IDLE = 0,
    RANOPT_DECISION_STEERING = 1,
    RANOPT_DECISION_SLEEPING = 2
} ranopt_decision;

/* Opaque run configuration. */
typedef struct ranopt_config ranopt_config;

typedef void (*ranopt_log_fn)(const char* line, void* user);

RANOPT_API const char* ranopt_version(void);

/* Module-qualified message of the last failing call on this thread ("" if none). */
RANOPT_API const char* ranopt_last_error(void);

/* NULL restores the default (stderr); a callback that ignores lines silences logging. */
RANOPT_API void ranopt_set_log_callback(ranopt_log_fn fn, void* user);

RANOPT_API ranopt_status ranopt_config_default(ranopt_config** out);

/* Built-in defaults, then each JSONC file in order, then RANOPT__* variables from envp (may be NULL). */
RANOPT_API ranopt_status ranopt_config_load(const char* const* files, size_t num_files, char** envp, ranopt_config** out);

/* Dotted path, e.g. "rl.steering.dqn.alpha"; the value text is parsed as JSON, otherwise taken as a string.
   The config is left unchanged when the result does not validate. */
RANOPT_API ranopt_status ranopt_config_set(ranopt_config* cfg, const char* path, const char* value);

/* Canonical JSON of the full config; release with ranopt_string_free. */
RANOPT_API ranopt_status ranopt_config_dump(const ranopt_config* cfg, char** json_out);

/* Numeric value at a dotted path. */
RANOPT_API ranopt_status ranopt_config_get_double(const ranopt_config* cfg, const char* path, double* out);

/* Hex hash of the canonical config, written into buf (17 bytes suffice). */
RANOPT_API ranopt_status ranopt_config_hash(const ranopt_config* cfg, char* buf, size_t buf_len);

RANOPT_API void ranopt_config_free(ranopt_config* cfg);
RANOPT_API void ranopt_string_free(char* s);

RANOPT_API ranopt_status ranopt_simulate(const ranopt_config* cfg, const char* out_dir);
RANOPT_API ranopt_status ranopt_train_forecaster(const ranopt_config* cfg, const char* sim_dir, const char* out_dir);
/* all != 0 trains both apps regardless of mode. */
RANOPT_API ranopt_status ranopt_train_apps(const ranopt_config* cfg, const char* out_dir, int all);
RANOPT_API ranopt_status ranopt_evaluate(const ranopt_config* cfg, const char* sim_dir, const char* model_dir,
                                         const char* apps_dir, const char* out_dir);
RANOPT_API ranopt_status ranopt_sweep(const ranopt_config* cfg, const char* apps_dir, const char* out_dir);
/* bin_mbps <= 0 uses 20. */
RANOPT_API ranopt_status ranopt_compare(const char* const* run_dirs, size_t num_dirs, const char* out_dir, double bin_mbps);
RANOPT_API ranopt_status ranopt_replay(const ranopt_config* cfg, const char* series_csv, const char* model_dir, const char* out_dir);
RANOPT_API ranopt_status ranopt_run(const ranopt_config* cfg, const char* out_dir);

/* Threshold rule: steering above th_p, sleeping below th_t, idle otherwise. */
RANOPT_API ranopt_status ranopt_decide(double predicted_mbps, double th_p, double th_t, ranopt_decision* out);

#ifdef __cplusplus
}
#endif

#endif
