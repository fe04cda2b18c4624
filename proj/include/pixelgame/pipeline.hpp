#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pixelgame/checkpoint.hpp"
#include "pixelgame/config.hpp"
#include "pixelgame/run_config.hpp"

namespace pixelgame {

using LogFn = std::function<void(const std::string&)>;

/// history.csv: epoch,u1,u2,g,a1,a2,phi1,phi2, then precision,recall,f1,iou
/// for p1_, p2_ and fused_. Values use "%.9g"; the file ends with a newline.
std::string history_csv(const TrainHistory& history);
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

/// source,precision,recall,f1,iou with rows player1, player2, fused.
std::string evaluation_csv(const EvaluationReport& report);

/// report.json: {"format": "pixelgame-report", "version": 1, "config": {...},
/// "parameters": {"player1", "player2", "total"}, "epochs_completed",
/// "final": {"utility": {...}, "player1"/"player2"/"fused": {precision,
/// recall, f1, iou}}, "equilibrium": {"window", "tol", "reached"}}.
void write_report_json(TrainedGame& game, const std::filesystem::path& path);

/// Trains per `config` and writes into `out_dir`: run.cfg, history.csv
/// (rewritten after every epoch), checkpoints/epoch_NNNN.pgck at the
/// configured interval, model.pgck and report.json.
TrainedGame run_training(const RunConfig& config, const std::filesystem::path& out_dir,
                         const LogFn& log = {});

/// Writes targets_per_image.csv, area_histogram.csv, cumulative_area.csv,
/// scr_histogram.csv and one PNG per panel into `dir`.
void write_stats(const StatsReport& report, const std::filesystem::path& dir);

enum class AblationAxis { UtilityComponents, LossMode, Mim };

struct AblationPlan {
  AblationAxis axis = AblationAxis::UtilityComponents;
  std::vector<std::string> levels;
  RunConfig base;

  /// Keys: axis, levels (comma separated), plus any run config key for the
  /// shared base (seed included).
  static AblationPlan load(const std::filesystem::path& path);
  static AblationPlan parse(const KeyValueDocument& doc);
  void validate() const;
};

std::string_view to_string(AblationAxis axis);

struct AblationRow {
  std::string level;
  double f1 = 0.0;
  double iou = 0.0;
  std::string status;  // "ok" or "failed: <reason>"
};

/// One seeded training per level under `out_dir/<level>/`, then ablation.csv
/// (level,f1,iou,status) and ablation.png. A failing level is recorded and
/// the plan continues.
std::vector<AblationRow> run_ablation(const AblationPlan& plan, const std::filesystem::path& out_dir,
                                      const LogFn& log = {});

}  // namespace pixelgame
