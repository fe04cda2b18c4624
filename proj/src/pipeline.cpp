#include "pixelgame/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "pixelgame/config.hpp"
#include "pixelgame/plot.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace pixelgame {

namespace {

constexpr double kEquilibriumWindow = 0.1;
constexpr double kEquilibriumTol = 0.05;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  // Write-then-rename so readers never observe a half-written file.
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

ordered_json metric_json(const MetricReport& m) {
  return ordered_json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"iou", m.iou}};
}

void log_to(const LogFn& log, const std::string& line) {
  if (log) log(line);
}

std::string epoch_line(const EpochRecord& r, int total) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "epoch %d/%d  phi1 %.4f  phi2 %.4f  g %.4f  | F1 p1 %.3f  p2 %.3f  fused %.3f",
                r.epoch, total, r.utility.phi1, r.utility.phi2, r.utility.g, r.player1.f1,
                r.player2.f1, r.fused.f1);
  return buf;
}

TrainedGame train_and_write(const RunConfig& config, const PreparedData& data, const fs::path& out_dir,
                            const LogFn& log) {
  fs::create_directories(out_dir);
  std::string cfg_text;
  for (const auto& [k, v] : config.entries()) cfg_text += k + " = " + v + "\n";
  write_file(out_dir / "run.cfg", cfg_text);

  TrainHistory progress;
  TrainCallbacks cb;
  cb.on_epoch = [&](const EpochRecord& r) {
    progress.epochs.push_back(r);
    write_history_csv(progress, out_dir / "history.csv");
    log_to(log, epoch_line(r, config.game.epochs));
  };
  cb.on_checkpoint = [&](const TrainedGame& g) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04zu.pgck", g.history.size());
    save_checkpoint(g, out_dir / "checkpoints" / name);
  };
  TrainedGame game = train(config.game, data.train, data.val, cb);
  write_history_csv(game.history, out_dir / "history.csv");
  save_checkpoint(game, out_dir / "model.pgck");
  write_report_json(game, out_dir / "report.json");
  return game;
}

}  // namespace

std::string history_csv(const TrainHistory& history) {
  std::string out = "epoch,u1,u2,g,a1,a2,phi1,phi2";
  for (const char* src : {"p1", "p2", "fused"}) {
    for (const char* m : {"precision", "recall", "f1", "iou"}) out += std::string(",") + src + "_" + m;
  }
  out += "\n";
  for (const auto& r : history.epochs) {
    out += std::to_string(r.epoch);
    const UtilityBundle& u = r.utility;
    for (double v : {u.u1, u.u2, u.g, u.a1, u.a2, u.phi1, u.phi2}) out += "," + fmt(v);
    for (const MetricReport* m : {&r.player1, &r.player2, &r.fused}) {
      for (double v : {m->precision, m->recall, m->f1, m->iou}) out += "," + fmt(v);
    }
    out += "\n";
  }
  return out;
}

void write_history_csv(const TrainHistory& history, const fs::path& path) {
  write_file(path, history_csv(history));
}

std::string evaluation_csv(const EvaluationReport& report) {
  std::string out = "source,precision,recall,f1,iou\n";
  const std::pair<const char*, const MetricReport*> rows[] = {
      {"player1", &report.player1}, {"player2", &report.player2}, {"fused", &report.fused}};
  for (const auto& [name, m] : rows) {
    out += std::string(name) + "," + fmt(m->precision) + "," + fmt(m->recall) + "," + fmt(m->f1) +
           "," + fmt(m->iou) + "\n";
  }
  return out;
}

void write_report_json(TrainedGame& game, const fs::path& path) {
  ordered_json j;
  j["format"] = "pixelgame-report";
  j["version"] = 1;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : game_config_entries(game.config)) cfg[k] = v;
  j["config"] = cfg;
  const std::size_t n1 = game.player1.parameter_count();
  const std::size_t n2 = game.player2.parameter_count();
  j["parameters"] = {{"player1", n1}, {"player2", n2}, {"total", n1 + n2}};
  j["epochs_completed"] = game.history.size();
  if (!game.history.empty()) {
    const EpochRecord& r = game.history.back();
    const UtilityBundle& u = r.utility;
    j["final"] = {{"utility",
                   {{"u1", u.u1}, {"u2", u.u2}, {"g", u.g}, {"a1", u.a1}, {"a2", u.a2},
                    {"phi1", u.phi1}, {"phi2", u.phi2}}},
                  {"player1", metric_json(r.player1)},
                  {"player2", metric_json(r.player2)},
                  {"fused", metric_json(r.fused)}};
    j["equilibrium"] = {{"window", kEquilibriumWindow},
                        {"tol", kEquilibriumTol},
                        {"reached", equilibrium_reached(game.history, kEquilibriumWindow, kEquilibriumTol)}};
  }
  write_file(path, j.dump(2) + "\n");
}

TrainedGame run_training(const RunConfig& config, const fs::path& out_dir, const LogFn& log) {
  config.validate();
  const PreparedData data = prepare_training_data(config);
  for (const auto& w : data.warnings) log_to(log, "warning: " + w);
  log_to(log, "training on " + std::to_string(data.train.size()) + " images, validating on " +
                  std::to_string(data.val.size()));
  return train_and_write(config, data, out_dir, log);
}

void write_stats(const StatsReport& r, const fs::path& dir) {
  fs::create_directories(dir);
  std::string counts = "targets,images\n";
  ChartSpec count_chart{"TARGETS PER IMAGE", {}, 640, 400};
  BarSeries count_series{"images", {}};
  for (const auto& [k, v] : r.targets_per_image) {
    counts += std::to_string(k) + "," + std::to_string(v) + "\n";
    count_chart.categories.push_back(std::to_string(k));
    count_series.values.push_back(v);
  }
  write_file(dir / "targets_per_image.csv", counts);
  write_bar_chart(dir / "targets_per_image.png", count_chart, {count_series});

  std::string areas = "area,targets\n";
  ChartSpec area_chart{"TARGET AREA (PX)", {}, 800, 400};
  BarSeries area_series{"targets", {}};
  for (const auto& [k, v] : r.area_histogram) {
    areas += std::to_string(k) + "," + std::to_string(v) + "\n";
    area_chart.categories.push_back(std::to_string(k));
    area_series.values.push_back(v);
  }
  write_file(dir / "area_histogram.csv", areas);
  write_bar_chart(dir / "area_histogram.png", area_chart, {area_series});

  std::string cumulative = "area,fraction\n";
  std::vector<double> cx, cy;
  for (const auto& [a, f] : r.cumulative_area) {
    cumulative += std::to_string(a) + "," + fmt(f) + "\n";
    cx.push_back(a);
    cy.push_back(f);
  }
  write_file(dir / "cumulative_area.csv", cumulative);
  write_line_chart(dir / "cumulative_area.png", ChartSpec{"CUMULATIVE AREA FRACTION", {}, 640, 400}, cx, cy);

  std::string scrs = "scr_bin,targets\n";
  ChartSpec scr_chart{"TARGET SCR", {}, 640, 400};
  BarSeries scr_series{"targets", {}};
  for (const auto& [k, v] : r.scr_histogram) {
    scrs += std::to_string(k) + "," + std::to_string(v) + "\n";
    scr_chart.categories.push_back(std::to_string(k));
    scr_series.values.push_back(v);
  }
  write_file(dir / "scr_histogram.csv", scrs);
  write_bar_chart(dir / "scr_histogram.png", scr_chart, {scr_series});
}

std::string_view to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::UtilityComponents: return "utility_components";
    case AblationAxis::LossMode: return "loss_mode";
    case AblationAxis::Mim: return "mim";
  }
  return "utility_components";
}

AblationPlan AblationPlan::parse(const KeyValueDocument& doc) {
  AblationPlan plan;
  bool have_axis = false;
  for (const auto& [k, v] : doc.entries()) {
    if (k == "axis") {
      have_axis = true;
      if (v == "utility_components") plan.axis = AblationAxis::UtilityComponents;
      else if (v == "loss_mode") plan.axis = AblationAxis::LossMode;
      else if (v == "mim") plan.axis = AblationAxis::Mim;
      else fail(ErrorKind::Config, "unknown ablation axis '" + v + "'");
    } else if (k == "levels") {
      std::string item;
      for (char ch : v + ",") {
        if (ch == ',') {
          const auto first = item.find_first_not_of(' ');
          const auto last = item.find_last_not_of(' ');
          if (first != std::string::npos) plan.levels.push_back(item.substr(first, last - first + 1));
          item.clear();
        } else {
          item.push_back(ch);
        }
      }
    } else {
      plan.base.set(k, v);
    }
  }
  if (!have_axis) fail(ErrorKind::Config, "ablation plan needs an 'axis' key");
  if (plan.levels.empty() && plan.axis == AblationAxis::Mim) plan.levels = {"with", "without"};
  plan.validate();
  return plan;
}

AblationPlan AblationPlan::load(const fs::path& path) { return parse(KeyValueDocument::load(path)); }

void AblationPlan::validate() const {
  if (levels.empty()) fail(ErrorKind::Config, "ablation plan has no levels");
  for (const auto& level : levels) {
    GameConfig probe = base.game;
    switch (axis) {
      case AblationAxis::UtilityComponents: probe.utility_components = UtilityComponents::parse(level); break;
      case AblationAxis::LossMode: parse_loss_kind(level); break;
      case AblationAxis::Mim:
        if (level != "with" && level != "without") {
          fail(ErrorKind::Config, "mim levels are 'with' and 'without', got '" + level + "'");
        }
        break;
    }
  }
  base.validate();
}

std::vector<AblationRow> run_ablation(const AblationPlan& plan, const fs::path& out_dir, const LogFn& log) {
  plan.validate();
  const PreparedData data = prepare_training_data(plan.base);
  for (const auto& w : data.warnings) log_to(log, "warning: " + w);
  std::vector<AblationRow> rows;
  for (const auto& level : plan.levels) {
    RunConfig cfg = plan.base;
    switch (plan.axis) {
      case AblationAxis::UtilityComponents: cfg.game.utility_components = UtilityComponents::parse(level); break;
      case AblationAxis::LossMode: cfg.game.loss_player1 = cfg.game.loss_player2 = parse_loss_kind(level); break;
      case AblationAxis::Mim: cfg.game.use_mim = level == "with"; break;
    }
    AblationRow row{level, std::nan(""), std::nan(""), "ok"};
    log_to(log, "level " + level);
    try {
      const TrainedGame game = train_and_write(cfg, data, out_dir / level, log);
      row.f1 = game.history.back().fused.f1;
      row.iou = game.history.back().fused.iou;
    } catch (const Error& e) {
      row.status = std::string("failed: ") + to_string(e.kind());
      log_to(log, "level " + level + " failed: " + e.what());
    }
    rows.push_back(row);
  }

  std::string csv = "level,f1,iou,status\n";
  ChartSpec chart{"ABLATION: " + std::string(to_string(plan.axis)), {}, 640, 400};
  BarSeries f1{"F1", {}}, iou{"IOU", {}};
  for (const auto& r : rows) {
    csv += r.level + "," + fmt(r.f1) + "," + fmt(r.iou) + "," + r.status + "\n";
    chart.categories.push_back(r.level);
    f1.values.push_back(r.f1);
    iou.values.push_back(r.iou);
  }
  write_file(out_dir / "ablation.csv", csv);
  write_bar_chart(out_dir / "ablation.png", chart, {f1, iou});
  return rows;
}

}  // namespace pixelgame
