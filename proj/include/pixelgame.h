#ifndef PIXELGAME_H
#define PIXELGAME_H

/*
 * C interface to the pixelGame library.
 *
 * Every object is an opaque handle created by a _new or _load call and
 * released with the matching _free. Every fallible call returns a
 * pg_status; on failure pg_last_error() describes the most recent error on
 * the calling thread. Strings returned by the library stay valid until the
 * next call on the same handle (or, for pg_last_error, the same thread).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PG_API __declspec(dllexport)
#else
#define PG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pg_status {
  PG_OK = 0,
  PG_ERR_CONFIG = 1,     /* malformed or invalid configuration */
  PG_ERR_DATA = 2,       /* missing, empty or inconsistent data */
  PG_ERR_IO = 3,         /* unreadable or unwritable path */
  PG_ERR_VERSION = 4,    /* checkpoint format or architecture mismatch */
  PG_ERR_GENERATION = 5, /* synthetic scene could not be generated */
  PG_ERR_DIMENSION = 6,  /* shape mismatch */
  PG_ERR_DIVERGENCE = 7, /* non-finite values during training */
  PG_ERR_VERIFY = 8,     /* at least one verification check failed */
  PG_ERR_ARGUMENT = 9,   /* NULL handle or out-of-range argument */
  PG_ERR_INTERNAL = 10
} pg_status;

/* Process exit code for a status: 0 ok, 1 usage/config, 2 data and I/O,
 * 3 divergence, 4 verification failure. */
PG_API int pg_exit_code(pg_status status);
PG_API const char* pg_status_name(pg_status status);
PG_API const char* pg_last_error(void);
PG_API const char* pg_version(void);

/* Receives one human-readable progress or warning line. */
typedef void (*pg_log_fn)(const char* line, void* user);

typedef struct pg_metrics {
  double precision;
  double recall;
  double f1;
  double iou;
} pg_metrics;

/* ---- run configuration ------------------------------------------------ */

typedef struct pg_config pg_config;

PG_API pg_status pg_config_new(pg_config** out);
/* Flat `key = value` text; `#` starts a comment; unknown keys are rejected. */
PG_API pg_status pg_config_load(const char* path, pg_config** out);
PG_API pg_status pg_config_set(pg_config* config, const char* key, const char* value);
/* Canonical text of `key`; *value stays valid until the next call on config. */
PG_API pg_status pg_config_get(pg_config* config, const char* key, const char** value);
PG_API pg_status pg_config_validate(const pg_config* config);
/* Output root: PIXELGAME_OUT when set, otherwise the out_dir key. */
PG_API pg_status pg_config_out_dir(pg_config* config, const char** value);
/* Writes the complete configuration in `key = value` form. */
PG_API pg_status pg_config_save(const pg_config* config, const char* path);
PG_API void pg_config_free(pg_config* config);

/* Documented keys, for help text. Returns 0 when index is out of range. */
PG_API size_t pg_config_key_count(void);
PG_API int pg_config_key_doc(size_t index, const char** key, const char** default_value,
                             const char** help);

/* ---- training and trained games --------------------------------------- */

typedef struct pg_game pg_game;

/* Trains per `config`, writing run.cfg, history.csv, checkpoints,
 * model.pgck and report.json into out_dir. `out` may be NULL. */
PG_API pg_status pg_train(const pg_config* config, const char* out_dir, pg_log_fn log, void* user,
                          pg_game** out);
PG_API pg_status pg_game_load(const char* checkpoint_path, pg_game** out);
PG_API pg_status pg_game_save(const pg_game* game, const char* checkpoint_path);
/* Evaluates on a dataset directory or `synth:N`. `metrics` receives
 * player1, player2 and fused (3 entries) and may be NULL; `csv_path` may be
 * NULL. */
PG_API pg_status pg_game_evaluate(pg_game* game, const char* data_source, const char* csv_path,
                                  pg_metrics* metrics, pg_log_fn log, void* user);
/* Exports MIM inputs, gates and outputs for one PNG image as .npy files. */
PG_API pg_status pg_game_dump_features(pg_game* game, const char* image_png, const char* out_dir);
PG_API size_t pg_game_epochs(const pg_game* game);
/* history.csv text for the game's training history. */
PG_API pg_status pg_game_history_csv(pg_game* game, const char** csv);
PG_API size_t pg_game_parameter_count(pg_game* game);
PG_API void pg_game_free(pg_game* game);

/* ---- data ------------------------------------------------------------- */

/* Generates n scenes into out_dir. params_path may be NULL for defaults. */
PG_API pg_status pg_synth(const char* params_path, int n, uint64_t seed, const char* out_dir,
                          pg_log_fn log, void* user);

typedef struct pg_stats_summary {
  int images;
  int targets;
  double single_target_fraction;
  double fraction_area_below_100;
  double fraction_scr_below_5;
} pg_stats_summary;

/* Histogram CSVs and PNG panels for a dataset directory or `synth:N`.
 * `summary` may be NULL. An empty dataset succeeds with a warning. */
PG_API pg_status pg_stats(const char* data_source, uint64_t seed, const char* out_dir,
                          pg_stats_summary* summary, pg_log_fn log, void* user);

/* ---- ablation --------------------------------------------------------- */

typedef struct pg_plan pg_plan;

/* Keys: axis (utility_components | loss_mode | mim), levels (comma
 * separated) and any run configuration key for the shared base. */
PG_API pg_status pg_plan_load(const char* path, pg_plan** out);
PG_API pg_status pg_plan_set(pg_plan* plan, const char* key, const char* value);
PG_API pg_status pg_plan_out_dir(pg_plan* plan, const char** value);
/* Runs every level; writes ablation.csv and ablation.png. A failing level
 * is recorded in the CSV and does not fail the call. */
PG_API pg_status pg_plan_run(pg_plan* plan, const char* out_dir, pg_log_fn log, void* user);
PG_API void pg_plan_free(pg_plan* plan);

/* ---- verification ----------------------------------------------------- */

typedef void (*pg_check_fn)(const char* name, int passed, const char* detail, void* user);

/* Runs the numerics gate; PG_ERR_VERIFY when any check fails. */
PG_API pg_status pg_verify(pg_check_fn on_check, void* user);

#ifdef __cplusplus
}
#endif

#endif
