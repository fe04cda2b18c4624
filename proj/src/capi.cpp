#include "pixelgame.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "pixelgame/checkpoint.hpp"
#include "pixelgame/config.hpp"
#include "pixelgame/pipeline.hpp"
#include "pixelgame/png_io.hpp"
#include "pixelgame/run_config.hpp"
#include "pixelgame/verify.hpp"

namespace fs = std::filesystem;
using namespace pixelgame;

struct pg_config {
  RunConfig run;
  std::string scratch;
};

struct pg_game {
  TrainedGame game;
  std::string scratch;
};

struct pg_plan {
  Entries entries;
  AblationPlan plan;
  std::string scratch;
};

namespace {

thread_local std::string g_last_error;

pg_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return PG_ERR_CONFIG;
    case ErrorKind::Data:
    case ErrorKind::EmptyTarget:
    case ErrorKind::DegenerateBackground: return PG_ERR_DATA;
    case ErrorKind::Io: return PG_ERR_IO;
    case ErrorKind::Version: return PG_ERR_VERSION;
    case ErrorKind::Generation: return PG_ERR_GENERATION;
    case ErrorKind::Dimension: return PG_ERR_DIMENSION;
    case ErrorKind::Divergence: return PG_ERR_DIVERGENCE;
  }
  return PG_ERR_INTERNAL;
}

template <typename F>
pg_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return PG_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PG_ERR_INTERNAL;
  }
}

pg_status bad_argument(const char* what) {
  g_last_error = what;
  return PG_ERR_ARGUMENT;
}

LogFn make_log(pg_log_fn log, void* user) {
  if (!log) return {};
  return [log, user](const std::string& line) { log(line.c_str(), user); };
}

void emit_warnings(const std::vector<std::string>& warnings, pg_log_fn log, void* user) {
  if (!log) return;
  for (const auto& w : warnings) log(("warning: " + w).c_str(), user);
}

pg_metrics to_c(const MetricReport& m) { return {m.precision, m.recall, m.f1, m.iou}; }

std::string render(const Entries& entries) {
  std::string text;
  for (const auto& [k, v] : entries) text += k + " = " + v + "\n";
  return text;
}

}  // namespace

extern "C" {

int pg_exit_code(pg_status status) {
  switch (status) {
    case PG_OK: return 0;
    case PG_ERR_CONFIG:
    case PG_ERR_ARGUMENT: return 1;
    case PG_ERR_DIVERGENCE: return 3;
    case PG_ERR_VERIFY: return 4;
    default: return 2;
  }
}

const char* pg_status_name(pg_status status) {
  switch (status) {
    case PG_OK: return "ok";
    case PG_ERR_CONFIG: return "config error";
    case PG_ERR_DATA: return "data error";
    case PG_ERR_IO: return "I/O error";
    case PG_ERR_VERSION: return "version error";
    case PG_ERR_GENERATION: return "generation error";
    case PG_ERR_DIMENSION: return "dimension error";
    case PG_ERR_DIVERGENCE: return "divergence";
    case PG_ERR_VERIFY: return "verification failed";
    case PG_ERR_ARGUMENT: return "invalid argument";
    case PG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pg_last_error(void) { return g_last_error.c_str(); }

const char* pg_version(void) { return "1.0.0"; }

pg_status pg_config_new(pg_config** out) {
  if (!out) return bad_argument("pg_config_new: out is NULL");
  return guarded([&] {
    *out = new pg_config{};
    return PG_OK;
  });
}

pg_status pg_config_load(const char* path, pg_config** out) {
  if (!path || !out) return bad_argument("pg_config_load: NULL argument");
  return guarded([&] {
    auto cfg = std::make_unique<pg_config>();
    cfg->run = RunConfig::load(path);
    *out = cfg.release();
    return PG_OK;
  });
}

pg_status pg_config_set(pg_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return bad_argument("pg_config_set: NULL argument");
  return guarded([&] {
    config->run.set(key, value);
    return PG_OK;
  });
}

pg_status pg_config_get(pg_config* config, const char* key, const char** value) {
  if (!config || !key || !value) return bad_argument("pg_config_get: NULL argument");
  return guarded([&] {
    for (const auto& [k, v] : config->run.entries()) {
      if (k == key) {
        config->scratch = v;
        *value = config->scratch.c_str();
        return PG_OK;
      }
    }
    fail(ErrorKind::Config, std::string("unknown config key '") + key + "'");
  });
}

pg_status pg_config_validate(const pg_config* config) {
  if (!config) return bad_argument("pg_config_validate: NULL config");
  return guarded([&] {
    config->run.validate();
    return PG_OK;
  });
}

pg_status pg_config_out_dir(pg_config* config, const char** value) {
  if (!config || !value) return bad_argument("pg_config_out_dir: NULL argument");
  return guarded([&] {
    config->scratch = resolve_out_dir(config->run).string();
    *value = config->scratch.c_str();
    return PG_OK;
  });
}

pg_status pg_config_save(const pg_config* config, const char* path) {
  if (!config || !path) return bad_argument("pg_config_save: NULL argument");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, std::string("cannot write '") + path + "'");
    out << render(config->run.entries());
    if (!out) fail(ErrorKind::Io, std::string("failed writing '") + path + "'");
    return PG_OK;
  });
}

void pg_config_free(pg_config* config) { delete config; }

size_t pg_config_key_count(void) { return RunConfig::documented_keys().size(); }

int pg_config_key_doc(size_t index, const char** key, const char** default_value, const char** help) {
  const auto& docs = RunConfig::documented_keys();
  if (index >= docs.size()) return 0;
  if (key) *key = docs[index].key.c_str();
  if (default_value) *default_value = docs[index].default_value.c_str();
  if (help) *help = docs[index].help.c_str();
  return 1;
}

pg_status pg_train(const pg_config* config, const char* out_dir, pg_log_fn log, void* user, pg_game** out) {
  if (!config || !out_dir) return bad_argument("pg_train: NULL argument");
  return guarded([&] {
    TrainedGame game = run_training(config->run, out_dir, make_log(log, user));
    if (out) *out = new pg_game{std::move(game), {}};
    return PG_OK;
  });
}

pg_status pg_game_load(const char* checkpoint_path, pg_game** out) {
  if (!checkpoint_path || !out) return bad_argument("pg_game_load: NULL argument");
  return guarded([&] {
    *out = new pg_game{load_checkpoint(checkpoint_path), {}};
    return PG_OK;
  });
}

pg_status pg_game_save(const pg_game* game, const char* checkpoint_path) {
  if (!game || !checkpoint_path) return bad_argument("pg_game_save: NULL argument");
  return guarded([&] {
    save_checkpoint(game->game, checkpoint_path);
    return PG_OK;
  });
}

pg_status pg_game_evaluate(pg_game* game, const char* data_source, const char* csv_path,
                           pg_metrics* metrics, pg_log_fn log, void* user) {
  if (!game || !data_source) return bad_argument("pg_game_evaluate: NULL argument");
  return guarded([&] {
    std::vector<std::string> warnings;
    // A directory with splits/test.txt is evaluated on that split only.
    const Dataset data =
        resolve_dataset(data_source, game->game.config.seed, SceneParams{}, Split::Test, &warnings);
    emit_warnings(warnings, log, user);
    if (data.empty()) fail(ErrorKind::Data, std::string("no images to evaluate in '") + data_source + "'");
    const EvaluationReport report = evaluate(game->game, data);
    if (csv_path) {
      const fs::path path(csv_path);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary);
      if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
      out << evaluation_csv(report);
      if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
    }
    if (metrics) {
      metrics[0] = to_c(report.player1);
      metrics[1] = to_c(report.player2);
      metrics[2] = to_c(report.fused);
    }
    return PG_OK;
  });
}

pg_status pg_game_dump_features(pg_game* game, const char* image_png, const char* out_dir) {
  if (!game || !image_png || !out_dir) return bad_argument("pg_game_dump_features: NULL argument");
  return guarded([&] {
    const RawImage raw = read_png_gray(image_png);
    dump_features(game->game, image_from_u8(raw.height, raw.width, raw.pixels), out_dir);
    return PG_OK;
  });
}

size_t pg_game_epochs(const pg_game* game) { return game ? game->game.history.size() : 0; }

pg_status pg_game_history_csv(pg_game* game, const char** csv) {
  if (!game || !csv) return bad_argument("pg_game_history_csv: NULL argument");
  return guarded([&] {
    game->scratch = history_csv(game->game.history);
    *csv = game->scratch.c_str();
    return PG_OK;
  });
}

size_t pg_game_parameter_count(pg_game* game) {
  if (!game) return 0;
  return game->game.player1.parameter_count() + game->game.player2.parameter_count();
}

void pg_game_free(pg_game* game) { delete game; }

pg_status pg_synth(const char* params_path, int n, uint64_t seed, const char* out_dir, pg_log_fn log,
                   void* user) {
  if (!out_dir) return bad_argument("pg_synth: NULL out_dir");
  if (n < 0) return bad_argument("pg_synth: negative scene count");
  return guarded([&] {
    const SceneParams params = params_path ? load_scene_params(params_path) : SceneParams{};
    const Dataset data = synth_dataset(params, n, seed);
    save_dataset(data, out_dir);
    if (log) log(("wrote " + std::to_string(n) + " scenes to " + std::string(out_dir)).c_str(), user);
    return PG_OK;
  });
}

pg_status pg_stats(const char* data_source, uint64_t seed, const char* out_dir, pg_stats_summary* summary,
                   pg_log_fn log, void* user) {
  if (!data_source) return bad_argument("pg_stats: NULL data source");
  return guarded([&] {
    std::vector<std::string> warnings;
    const Dataset data = resolve_dataset(data_source, seed, SceneParams{}, std::nullopt, &warnings);
    emit_warnings(warnings, log, user);
    const StatsReport report = dataset_stats(data);
    if (out_dir) write_stats(report, out_dir);
    if (summary) {
      summary->images = report.images;
      summary->targets = report.targets;
      summary->single_target_fraction = report.single_target_fraction();
      summary->fraction_area_below_100 = report.fraction_area_below(100);
      summary->fraction_scr_below_5 = report.fraction_scr_below(5.0);
    }
    return PG_OK;
  });
}

pg_status pg_plan_load(const char* path, pg_plan** out) {
  if (!path || !out) return bad_argument("pg_plan_load: NULL argument");
  return guarded([&] {
    const KeyValueDocument doc = KeyValueDocument::load(path);
    auto plan = std::make_unique<pg_plan>();
    plan->entries = doc.entries();
    plan->plan = AblationPlan::parse(doc);
    *out = plan.release();
    return PG_OK;
  });
}

pg_status pg_plan_set(pg_plan* plan, const char* key, const char* value) {
  if (!plan || !key || !value) return bad_argument("pg_plan_set: NULL argument");
  return guarded([&] {
    Entries entries = plan->entries;
    bool replaced = false;
    for (auto& [k, v] : entries) {
      if (k == key) {
        v = value;
        replaced = true;
      }
    }
    if (!replaced) entries.emplace_back(key, value);
    plan->plan = AblationPlan::parse(KeyValueDocument::parse(render(entries), "ablation plan"));
    plan->entries = std::move(entries);
    return PG_OK;
  });
}

pg_status pg_plan_out_dir(pg_plan* plan, const char** value) {
  if (!plan || !value) return bad_argument("pg_plan_out_dir: NULL argument");
  return guarded([&] {
    plan->scratch = resolve_out_dir(plan->plan.base).string();
    *value = plan->scratch.c_str();
    return PG_OK;
  });
}

pg_status pg_plan_run(pg_plan* plan, const char* out_dir, pg_log_fn log, void* user) {
  if (!plan || !out_dir) return bad_argument("pg_plan_run: NULL argument");
  return guarded([&] {
    run_ablation(plan->plan, out_dir, make_log(log, user));
    return PG_OK;
  });
}

void pg_plan_free(pg_plan* plan) { delete plan; }

pg_status pg_verify(pg_check_fn on_check, void* user) {
  return guarded([&] {
    const auto checks = run_verify([&](const VerifyCheck& c) {
      if (on_check) on_check(c.name.c_str(), c.passed ? 1 : 0, c.detail.c_str(), user);
    });
    for (const auto& c : checks) {
      if (!c.passed) {
        g_last_error = "verification failed: " + c.name;
        return PG_ERR_VERIFY;
      }
    }
    return PG_OK;
  });
}

}  // extern "C"
