#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pixelgame.h"

namespace {

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

int report(pg_status status) {
  if (status == PG_OK) return 0;
  std::fprintf(stderr, "error (%s): %s\n", pg_status_name(status), pg_last_error());
  return pg_exit_code(status);
}

std::string config_key_help() {
  std::string text = "\nConfiguration keys (flat `key = value` file; flags override the file):\n";
  const char *key, *def, *help;
  for (std::size_t i = 0; pg_config_key_doc(i, &key, &def, &help); ++i) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "  %-20s default %-15s %s\n", key, *def ? def : "\"\"", help);
    text += buf;
  }
  text += "\nPIXELGAME_OUT, when set, replaces out_dir (an explicit --out still wins).\n";
  return text;
}

// Flags shared by train and ablate; each maps onto one configuration key.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<std::string> data;
  std::optional<std::string> val_data;
  std::optional<std::string> utility_components;
  std::optional<std::string> loss_mode;
  std::optional<std::string> device;
  std::vector<std::string> set;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed (key: seed)");
    cmd->add_option("--epochs", epochs, "Training epochs (key: epochs)");
    cmd->add_option("--data", data, "Training data: a dataset directory or synth:N (key: train_data)");
    cmd->add_option("--val-data", val_data, "Validation data (key: val_data)");
    cmd->add_option("--utility-components", utility_components,
                    "Utility terms, e.g. U, U+A, U+G, U+A+G (key: utility_components)");
    cmd->add_option("--loss-mode", loss_mode, "game, dice, iou or ss for both players (key: loss_mode)");
    cmd->add_option("--device", device, "Compute device; only cpu is supported (key: device)");
    cmd->add_option("--set", set, "Any configuration override as key=value (repeatable)");
  }

  template <typename Setter>
  pg_status apply(Setter&& put) const {
    std::vector<std::pair<std::string, std::string>> kv;
    if (seed) kv.emplace_back("seed", std::to_string(*seed));
    if (epochs) kv.emplace_back("epochs", std::to_string(*epochs));
    if (data) kv.emplace_back("train_data", *data);
    if (val_data) kv.emplace_back("val_data", *val_data);
    if (utility_components) kv.emplace_back("utility_components", *utility_components);
    if (loss_mode) kv.emplace_back("loss_mode", *loss_mode);
    if (device) kv.emplace_back("device", *device);
    for (const auto& item : set) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", item.c_str());
        return PG_ERR_CONFIG;
      }
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      kv.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
    }
    for (const auto& [k, v] : kv) {
      const pg_status st = put(k.c_str(), v.c_str());
      if (st != PG_OK) return st;
    }
    return PG_OK;
  }
};

int cmd_train(const std::string& config_path, const Overrides& overrides, const std::string& out_flag) {
  pg_config* cfg = nullptr;
  pg_status st = config_path.empty() ? pg_config_new(&cfg) : pg_config_load(config_path.c_str(), &cfg);
  if (st != PG_OK) return report(st);
  st = overrides.apply([&](const char* k, const char* v) { return pg_config_set(cfg, k, v); });
  if (st == PG_OK) st = pg_config_validate(cfg);
  std::string out_dir = out_flag;
  if (st == PG_OK && out_dir.empty()) {
    const char* resolved = nullptr;
    st = pg_config_out_dir(cfg, &resolved);
    if (st == PG_OK) out_dir = resolved;
  }
  if (st == PG_OK) {
    std::printf("training into %s\n", out_dir.c_str());
    st = pg_train(cfg, out_dir.c_str(), print_line, nullptr, nullptr);
  }
  pg_config_free(cfg);
  if (st == PG_OK) std::printf("wrote %s/history.csv, model.pgck, report.json\n", out_dir.c_str());
  return report(st);
}

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& csv_flag,
             const std::string& features_image, const std::string& features_dir) {
  pg_game* game = nullptr;
  pg_status st = pg_game_load(checkpoint.c_str(), &game);
  if (st != PG_OK) return report(st);
  std::string csv = csv_flag;
  if (csv.empty()) {
    csv = (std::filesystem::path(checkpoint).parent_path() / "evaluation.csv").string();
  }
  pg_metrics m[3];
  st = pg_game_evaluate(game, data.c_str(), csv.c_str(), m, print_line, nullptr);
  if (st == PG_OK) {
    std::printf("%-8s %10s %10s %10s %10s\n", "source", "precision", "recall", "f1", "iou");
    const char* names[3] = {"player1", "player2", "fused"};
    for (int i = 0; i < 3; ++i) {
      std::printf("%-8s %10.4f %10.4f %10.4f %10.4f\n", names[i], m[i].precision, m[i].recall, m[i].f1,
                  m[i].iou);
    }
    std::printf("wrote %s\n", csv.c_str());
  }
  if (st == PG_OK && !features_image.empty()) {
    st = pg_game_dump_features(game, features_image.c_str(), features_dir.c_str());
    if (st == PG_OK) std::printf("wrote MIM features to %s\n", features_dir.c_str());
  }
  pg_game_free(game);
  return report(st);
}

int cmd_ablate(const std::string& plan_path, const Overrides& overrides, const std::string& out_flag) {
  pg_plan* plan = nullptr;
  pg_status st = pg_plan_load(plan_path.c_str(), &plan);
  if (st != PG_OK) return report(st);
  st = overrides.apply([&](const char* k, const char* v) { return pg_plan_set(plan, k, v); });
  std::string out_dir = out_flag;
  if (st == PG_OK && out_dir.empty()) {
    const char* resolved = nullptr;
    st = pg_plan_out_dir(plan, &resolved);
    if (st == PG_OK) out_dir = resolved;
  }
  if (st == PG_OK) st = pg_plan_run(plan, out_dir.c_str(), print_line, nullptr);
  pg_plan_free(plan);
  if (st == PG_OK) std::printf("wrote %s/ablation.csv and ablation.png\n", out_dir.c_str());
  return report(st);
}

void print_check(const char* name, int passed, const char* detail, void*) {
  std::printf("[%s] %s: %s\n", passed ? "PASS" : "FAIL", name, detail);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pixelgame: infrared small-target segmentation as a two-player game"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pg_version()));

  std::string config_path, out_dir;
  Overrides overrides;
  auto* train = app.add_subcommand("train", "Train both players and write history, checkpoints and a report");
  train->add_option("--config", config_path, "Run configuration file (key = value)")->check(CLI::ExistingFile);
  overrides.attach(train);
  train->add_option("--out", out_dir, "Output directory (default: PIXELGAME_OUT, else out_dir)");
  train->footer(config_key_help());

  std::string checkpoint, eval_data, eval_csv, features_image, features_dir = "features";
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint; writes source,precision,recall,f1,iou CSV");
  eval->add_option("checkpoint,--checkpoint", checkpoint, "Checkpoint file (model.pgck)")->required();
  eval->add_option("data,--data", eval_data, "Dataset directory or synth:N (splits/test.txt is honored)")
      ->required();
  eval->add_option("--out", eval_csv, "CSV path (default: evaluation.csv next to the checkpoint)");
  eval->add_option("--dump-features", features_image, "Also export MIM features for this PNG image");
  eval->add_option("--features-out", features_dir, "Directory for exported features")->capture_default_str();

  std::string params_path, synth_out;
  int synth_n = 100;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a calibrated synthetic infrared dataset");
  synth->add_option("-n,--count", synth_n, "Number of scenes")->capture_default_str()->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("--params", params_path, "Scene parameter file (key = value)")->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output dataset directory")->required();

  std::string stats_data, stats_out = "stats";
  std::uint64_t stats_seed = 0;
  auto* stats = app.add_subcommand("stats", "Target count, area and SCR histograms (CSV and PNG)");
  stats->add_option("data,--data", stats_data, "Dataset directory or synth:N")->required();
  stats->add_option("--seed", stats_seed, "Seed for synth:N sources")->capture_default_str();
  stats->add_option("--out", stats_out, "Output directory")->capture_default_str();

  std::string plan_path, ablate_out;
  Overrides ablate_overrides;
  auto* ablate = app.add_subcommand("ablate", "Train one seeded run per level; writes ablation.csv and ablation.png");
  ablate->add_option("plan,--plan", plan_path, "Ablation plan (axis, levels, shared run keys)")
      ->required()
      ->check(CLI::ExistingFile);
  ablate_overrides.attach(ablate);
  ablate->add_option("--out", ablate_out, "Output directory (default: PIXELGAME_OUT, else out_dir)");
  ablate->footer(config_key_help());

  auto* verify = app.add_subcommand("verify", "Run the numerics gate (gradients, metrics, MIM, architecture)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*train) return cmd_train(config_path, overrides, out_dir);
  if (*eval) return cmd_eval(checkpoint, eval_data, eval_csv, features_image, features_dir);
  if (*synth) {
    const pg_status st = pg_synth(params_path.empty() ? nullptr : params_path.c_str(), synth_n, synth_seed,
                                  synth_out.c_str(), print_line, nullptr);
    return report(st);
  }
  if (*stats) {
    pg_stats_summary s{};
    const pg_status st = pg_stats(stats_data.c_str(), stats_seed, stats_out.c_str(), &s, print_line, nullptr);
    if (st == PG_OK) {
      std::printf("images %d, targets %d\n", s.images, s.targets);
      std::printf("single-target images %.3f, targets under 100 px %.3f, SCR below 5 %.3f\n",
                  s.single_target_fraction, s.fraction_area_below_100, s.fraction_scr_below_5);
      std::printf("wrote %s\n", stats_out.c_str());
    }
    return report(st);
  }
  if (*ablate) return cmd_ablate(plan_path, ablate_overrides, ablate_out);
  if (*verify) {
    const pg_status st = pg_verify(print_check, nullptr);
    std::printf("%s\n", st == PG_OK ? "all checks passed" : "verification FAILED");
    return report(st);
  }
  return 1;
}
