// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--workdir DIR] [train-desk | c1 c2 ... c8 | c5-runtime]
//
// Without arguments every criterion runs. The desk-scale training is stored
// in DIR/desk/ so that c5, c5-runtime and c6 can share it across processes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pixelgame/data.hpp"
#include "pixelgame/fdcn.hpp"
#include "pixelgame/game.hpp"
#include "pixelgame/metrics.hpp"
#include "pixelgame/mim.hpp"
#include "pixelgame/pipeline.hpp"
#include "pixelgame/utility.hpp"

#ifndef PIXELGAME_CLI_PATH
#error "PIXELGAME_CLI_PATH must name the CLI executable"
#endif

namespace fs = std::filesystem;
using namespace pixelgame;
using Clock = std::chrono::steady_clock;

namespace {

// ---- pinned tolerances ----------------------------------------------------
constexpr double kBruteForceSeconds = 60.0;
constexpr double kGradTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr double kGateSumTol = 1e-6;
constexpr std::size_t kParamLow = 1500000, kParamHigh = 1900000;
constexpr double kDeskMinutes = 30.0;
constexpr double kEqWindow = 0.1, kEqTol = 0.05;
constexpr double kFusionMargin = 0.02;
constexpr double kSingleLow = 0.75, kSingleHigh = 0.85;
constexpr double kSmallAreaMin = 0.90;
constexpr double kLowScrLow = 0.60, kLowScrHigh = 0.80;

// Desk fixture.
constexpr int kDeskImages = 200;
constexpr int kDeskEpochs = 60;
constexpr int kDeskBatch = 8;
constexpr double kDeskLr = 1e-5;
constexpr std::uint64_t kDeskSeed = 2024;

int g_failures = 0;

void line(const std::string& id, bool ok, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}); }

// Central differences of f at x, compared coordinate-wise with `analytic`.
double fd_worst(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                const std::vector<double>& analytic) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + kFdStep;
    const double up = f(x);
    x[i] = keep - kFdStep;
    const double down = f(x);
    x[i] = keep;
    worst = std::max(worst, rel_err(analytic[i], (up - down) / (2 * kFdStep)));
  }
  return worst;
}

// ---- C1 ---------------------------------------------------------------------
void c1() {
  const auto t0 = Clock::now();
  long bad = 0;
  for (int a = 0; a < 512; ++a) {
    BinaryMask p(3, 3);
    for (int i = 0; i < 9; ++i) p[i] = (a >> i) & 1;
    for (int b = 0; b < 512; ++b) {
      BinaryMask g(3, 3);
      for (int i = 0; i < 9; ++i) g[i] = (b >> i) & 1;
      // Popcount oracle.
      const int tp = __builtin_popcount(a & b), fp = __builtin_popcount(a & ~b & 511);
      const int fn = __builtin_popcount(~a & b & 511), tn = 9 - tp - fp - fn;
      const double P = tp + fp ? double(tp) / (tp + fp) : 0, R = tp + fn ? double(tp) / (tp + fn) : 0;
      const double F = P + R > 0 ? 2 * P * R / (P + R) : 0, I = tp + fp + fn ? double(tp) / (tp + fp + fn) : 0;
      const ConfusionCounts c = confusion_counts(p, g);
      const MetricReport m = metrics(c);
      if (c.tps != tp || c.fps != fp || c.fns != fn || c.tns != tn || std::abs(m.precision - P) > 1e-15 ||
          std::abs(m.recall - R) > 1e-15 || std::abs(m.f1 - F) > 1e-15 || std::abs(m.iou - I) > 1e-15)
        ++bad;
    }
  }
  const double s = seconds_since(t0);
  line("C1 metric brute force", bad == 0 && s < kBruteForceSeconds,
       "262144 mask pairs, " + std::to_string(bad) + " mismatches, " + fmt("%.2f s", s) + " (limit 60 s)");
}

// ---- C2 ---------------------------------------------------------------------
void c2() {
  std::mt19937_64 rng(8080);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  BinaryMask g(8, 8);
  for (auto& v : g.values()) v = rng() % 4 == 0;
  std::vector<double> x1(64), x2(64);
  for (auto& v : x1) v = u(rng);
  for (auto& v : x2) v = u(rng);
  const auto pm = [](const std::vector<double>& v) { return ProbabilityMap(8, 8, v); };

  std::vector<std::pair<std::string, double>> errs;
  errs.emplace_back("u1", fd_worst([&](const auto& v) { return fns_player_utility(pm(v), g); }, x1,
                                   fns_player_utility_grad(pm(x1), g)));
  errs.emplace_back("u2", fd_worst([&](const auto& v) { return fps_player_utility(pm(v), g); }, x2,
                                   fps_player_utility_grad(pm(x2), g)));
  {
    std::vector<double> d1, d2;
    game_utility_grad(pm(x1), pm(x2), g, d1, d2);
    errs.emplace_back("G/o1", fd_worst([&](const auto& v) { return game_utility(pm(v), pm(x2), g); }, x1, d1));
    errs.emplace_back("G/o2", fd_worst([&](const auto& v) { return game_utility(pm(x1), pm(v), g); }, x2, d2));
  }
  errs.emplace_back("A", fd_worst([&](const auto& v) { return area_constraint(pm(v)); }, x1,
                                  area_constraint_grad(pm(x1))));
  for (LossKind k : {LossKind::Dice, LossKind::Iou, LossKind::Ss}) {
    const LossSpec spec{k, 0.5};
    errs.emplace_back(std::string(to_string(k)),
                      fd_worst([&](const auto& v) { return combined_loss(spec, pm(v), g); }, x1,
                               combined_loss_grad(spec, pm(x1), g)));
  }

  // MIM block in double, evaluation-mode normalization, L = mean(r .* z).
  {
    std::normal_distribution<double> n(0, 1);
    MimBlock<double> block("mim", 4);
    block.init(rng, 0.3);
    std::vector<Param<double>*> ps;
    block.params(ps);
    for (auto* p : ps)
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] += 0.1 * n(rng);
    Tensor<double> x(Shape{1, 4, 8, 8}), r(Shape{1, 4, 8, 8});
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = n(rng);
      r[i] = n(rng) / 256.0;
    }
    const auto loss = [&] {
      const Tensor<double> z = block.forward(x, false, false);
      double s = 0;
      for (std::size_t i = 0; i < z.size(); ++i) s += r[i] * z[i];
      return s;
    };
    for (auto* p : ps) p->zero_grad();
    block.forward(x, false, true);
    const Tensor<double> dx = block.backward(x, r);
    double worst = 0;
    const auto probe = [&](double& v, double a) {
      const double keep = v;
      v = keep + kFdStep;
      const double up = loss();
      v = keep - kFdStep;
      const double down = loss();
      v = keep;
      worst = std::max(worst, rel_err(a, (up - down) / (2 * kFdStep)));
    };
    for (std::size_t i = 0; i < x.size(); ++i) probe(x[i], dx[i]);
    for (auto* p : ps)
      for (std::size_t i = 0; i < p->value.size(); ++i) probe(p->value[i], p->grad[i]);
    errs.emplace_back("MIM", worst);
  }

  // Three-layer FDCN stub in double, training-mode normalization, batch of 2.
  {
    std::normal_distribution<double> n(0, 1);
    PlayerNetwork<double> net(FdcnSpec::from_dilations({1, 2, 1}, 4), false, 99);
    for (auto* p : net.params())
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] += 0.1 * n(rng);
    Tensor<double> x(Shape{2, 1, 8, 8}), r(Shape{2, 1, 8, 8});
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = u(rng);
      r[i] = n(rng);
    }
    const auto loss = [&] {
      const Tensor<double> y = net.forward(x, true, false);
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
      return s;
    };
    net.zero_grad();
    net.forward(x, true, true);
    const Tensor<double> dx = net.backward(r, true);
    double worst = 0;
    const auto probe = [&](double& v, double a) {
      const double keep = v;
      v = keep + kFdStep;
      const double up = loss();
      v = keep - kFdStep;
      const double down = loss();
      v = keep;
      worst = std::max(worst, rel_err(a, (up - down) / (2 * kFdStep)));
    };
    for (auto* p : net.params())
      for (std::size_t i = 0; i < p->value.size(); ++i) probe(p->value[i], p->grad[i]);
    for (std::size_t i = 0; i < x.size(); ++i) probe(x[i], dx[i]);
    errs.emplace_back("FDCN-3", worst);
  }

  double worst = 0;
  std::string detail;
  for (const auto& [name, e] : errs) {
    worst = std::max(worst, e);
    detail += name + " " + fmt("%.1e", e) + ", ";
  }
  line("C2 gradient checks", worst < kGradTol, detail + "max " + fmt("%.2e", worst) + " (tol 1e-4)");
}

// ---- C3 ---------------------------------------------------------------------
void c3() {
  const std::vector<int> t9{1, 2, 4, 8, 16, 8, 4, 2, 1};
  const std::vector<int> t13{1, 2, 4, 8, 16, 32, 64, 32, 16, 8, 4, 2, 1};
  const FdcnSpec f9 = FdcnSpec::fdcn9(), f13 = FdcnSpec::fdcn13();
  const auto rf = [](const std::vector<int>& d) {
    int r = 1;
    for (int v : d) r += 2 * v;
    return r;
  };
  PlayerNetwork<float> p1(f9, true, 1), p2(f13, true, 2);
  const std::size_t total = p1.parameter_count() + p2.parameter_count();
  const bool ok = f9.dilations() == t9 && f13.dilations() == t13 && rf(t9) == 93 && rf(t13) == 381 &&
                  receptive_field(f9) == 93 && receptive_field(f13) == 381 && total >= kParamLow &&
                  total <= kParamHigh;
  line("C3 architecture anchors", ok,
       "dilations match tables, RF " + std::to_string(receptive_field(f9)) + "/" +
           std::to_string(receptive_field(f13)) + ", parameters " + std::to_string(p1.parameter_count()) +
           " + " + std::to_string(p2.parameter_count()) + " = " + std::to_string(total) +
           " (band [1.5M, 1.9M])");
}

// ---- C4 ---------------------------------------------------------------------
void c4() {
  std::mt19937_64 rng(4444);
  std::normal_distribution<double> n(0, 1);
  double worst = 0;
  bool in_range = true;
  for (int t = 0; t < 1000; ++t) {
    const int C = 1 + int(rng() % 12), H = 1 + int(rng() % 6), W = 1 + int(rng() % 6);
    MIMParams p("mim", C);
    p.init(rng, 0.5);
    FeatureMap x(Shape{1, C, H, W});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 4 * n(rng);
    const auto m2 = channel_gate(spatial_channel_attention(x, p), gmp_attention(x), p);
    double s = 0;
    for (double v : m2) s += v;
    worst = std::max(worst, std::abs(s - 1));
    for (double v : spatial_gate(x)) in_range = in_range && v > 0 && v < 1;
  }

  // 2x2x2 hand oracle: evaluation-mode normalization with fixed statistics.
  MIMParams p("mim", 2);
  const double ws[2] = {0.5, -0.25}, wq[4] = {0.2, 0.3, -0.1, 0.4}, we[2] = {1.0, -0.5}, be[2] = {0.0, 0.1};
  p.pw_spatial.weight.value[0] = ws[0];
  p.pw_spatial.weight.value[1] = ws[1];
  for (int i = 0; i < 4; ++i) p.pw_squeeze.weight.value[i] = wq[i];
  for (int c = 0; c < 2; ++c) {
    p.pw_excite.weight.value[c] = we[c];
    p.pw_excite.bias.value[c] = be[c];
  }
  p.bn_spatial.running_mean[0] = 0.1;
  p.bn_spatial.running_var[0] = 0.25;
  p.bn_squeeze.running_mean[0] = -0.2;
  p.bn_squeeze.running_var[0] = 1.5;
  const double x[2][4] = {{1.0, 0.0, -1.0, 2.0}, {0.5, 0.5, 1.5, -0.5}};
  FeatureMap fx(Shape{1, 2, 2, 2});
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 4; ++i) fx.channel(0, c)[i] = x[c][i];
  const auto lrelu = [](double v) { return v > 0 ? v : 0.01 * v; };
  const auto sig = [](double v) { return 1 / (1 + std::exp(-v)); };
  double y[4], e = 0;
  for (int i = 0; i < 4; ++i) {
    y[i] = lrelu((ws[0] * x[0][i] + ws[1] * x[1][i] - 0.1) / std::sqrt(0.25 + 1e-5));
    e += std::exp(y[i]);
  }
  double m1[4];
  for (int c = 0; c < 2; ++c) {
    double v1 = 0, mx = -1e300;
    for (int i = 0; i < 4; ++i) {
      v1 += x[c][i] * std::exp(y[i]) / e;
      mx = std::max(mx, x[c][i]);
    }
    m1[c] = v1;
    m1[2 + c] = sig(mx);
  }
  double q = 0;
  for (int k = 0; k < 4; ++k) q += wq[k] * m1[k];
  q = lrelu((q + 0.2) / std::sqrt(1.5 + 1e-5));
  const double e0 = std::exp(we[0] * q + be[0]), e1 = std::exp(we[1] * q + be[1]);
  const double m2[2] = {e0 / (e0 + e1), e1 / (e0 + e1)};
  const FeatureMap z = mim_forward(fx, p);
  double oracle_err = 0;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 4; ++i) {
      const double want = (m2[c] + sig(std::max(x[0][i], x[1][i]))) * x[c][i];
      oracle_err = std::max(oracle_err, std::abs(want - z.channel(0, c)[i]));
    }
  line("C4 MIM normalization", worst < kGateSumTol && in_range && oracle_err < 1e-12,
       "1000 inputs: max |sum m2 - 1| " + fmt("%.1e", worst) + (in_range ? ", m3 in (0,1)" : ", m3 OUT OF (0,1)") +
           "; 2x2x2 oracle max diff " + fmt("%.1e", oracle_err));
}

// ---- C5 / C6 ----------------------------------------------------------------
struct DeskRun {
  std::string components;
  double seconds = 0;
  TrainHistory history;
};

std::pair<Dataset, Dataset> desk_data() {
  const Dataset all = synth_dataset(SceneParams{}, kDeskImages, kDeskSeed);
  return resplit(all, 0.8, kDeskSeed);
}

GameConfig desk_config(const std::string& components) {
  GameConfig c;
  c.epochs = kDeskEpochs;
  c.batch_size = kDeskBatch;
  c.learning_rate = kDeskLr;
  c.crop = 64;
  c.resize = 64;
  c.seed = kDeskSeed;
  c.utility_components = UtilityComponents::parse(components);
  return c;
}

fs::path desk_file(const fs::path& work, const std::string& components) {
  std::string name = components;
  for (auto& ch : name)
    if (ch == '+') ch = '_';
  return work / "desk" / (name + ".json");
}

// Trains (timing data generation too) and stores the history next to the
// wall time so later criteria can read the same run.
DeskRun run_desk(const fs::path& work, const std::string& components) {
  const auto t0 = Clock::now();
  auto [tr, va] = desk_data();
  const GameConfig cfg = desk_config(components);
  fs::create_directories(work / "desk");
  std::ofstream progress(fs::path(desk_file(work, components)).replace_extension(".progress"));
  TrainCallbacks cb;
  cb.on_epoch = [&](const EpochRecord& r) {
    progress << r.epoch << " " << seconds_since(t0) << " s  phi1 " << r.utility.phi1 << " phi2 " << r.utility.phi2
             << "  F1 " << r.player1.f1 << " " << r.player2.f1 << " " << r.fused.f1 << std::endl;
    std::printf("  [%s] epoch %d/%d  %.0f s  phi1 %.4f phi2 %.4f  F1 p1 %.3f p2 %.3f fused %.3f\n",
                components.c_str(), r.epoch, cfg.epochs, seconds_since(t0), r.utility.phi1, r.utility.phi2,
                r.player1.f1, r.player2.f1, r.fused.f1);
    std::fflush(stdout);
  };
  const TrainedGame game = train(cfg, tr, va, cb);
  DeskRun run{components, seconds_since(t0), game.history};
  write_history_csv(run.history, desk_file(work, components).replace_extension(".csv"));
  nlohmann::json j{{"components", components}, {"seconds", run.seconds}};
  std::ofstream(desk_file(work, components)) << j.dump(2) << "\n";
  return run;
}

std::optional<DeskRun> load_desk(const fs::path& work, const std::string& components) {
  const fs::path meta = desk_file(work, components);
  fs::path csv = meta;
  csv.replace_extension(".csv");
  if (!fs::exists(meta) || !fs::exists(csv)) return std::nullopt;
  DeskRun run;
  run.components = components;
  run.seconds = nlohmann::json::parse(std::ifstream(meta)).at("seconds").get<double>();
  std::ifstream in(csv);
  std::string row;
  std::getline(in, row);
  while (std::getline(in, row)) {
    std::vector<double> v;
    std::stringstream ss(row);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 20) return std::nullopt;
    EpochRecord r;
    r.epoch = static_cast<int>(v[0]);
    r.utility = {v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
    r.player1 = {v[8], v[9], v[10], v[11]};
    r.player2 = {v[12], v[13], v[14], v[15]};
    r.fused = {v[16], v[17], v[18], v[19]};
    run.history.epochs.push_back(r);
  }
  if (run.history.size() != static_cast<std::size_t>(kDeskEpochs)) return std::nullopt;
  return run;
}

DeskRun desk(const fs::path& work, const std::string& components, bool reuse) {
  if (reuse) {
    if (auto r = load_desk(work, components)) {
      std::printf("  reusing the stored %s desk run from %s\n", components.c_str(), (work / "desk").c_str());
      return *r;
    }
  }
  return run_desk(work, components);
}

void c5(const DeskRun& run) {
  const EpochRecord& last = run.history.back();
  const bool eq = equilibrium_reached(run.history, kEqWindow, kEqTol);
  // Trailing-window spreads, recomputed here for the report.
  const std::size_t n = run.history.size();
  const std::size_t k = std::min(n, std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(kEqWindow * n))));
  double spread[2] = {0, 0};
  for (int p = 0; p < 2; ++p) {
    double lo = 1e300, hi = -1e300, sum = 0;
    for (std::size_t i = n - k; i < n; ++i) {
      const double v = p == 0 ? run.history.epochs[i].utility.phi1 : run.history.epochs[i].utility.phi2;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    spread[p] = (hi - lo) / std::abs(sum / k);
  }
  line("C5a desk equilibrium", eq,
       "relative range over the last " + std::to_string(k) + " epochs: phi1 " + fmt("%.4f", spread[0]) + ", phi2 " +
           fmt("%.4f", spread[1]) + " (tol 0.05)");
  const bool roles = last.player1.recall > last.player2.recall && last.player2.precision > last.player1.precision;
  line("C5b player roles", roles,
       "recall p1 " + fmt("%.4f", last.player1.recall) + " vs p2 " + fmt("%.4f", last.player2.recall) +
           "; precision p2 " + fmt("%.4f", last.player2.precision) + " vs p1 " + fmt("%.4f", last.player1.precision));
  const double best = std::max(last.player1.f1, last.player2.f1);
  line("C5c fusion", last.fused.f1 >= best - kFusionMargin,
       "fused F1 " + fmt("%.4f", last.fused.f1) + " vs max player F1 " + fmt("%.4f", best) + " - 0.02");
}

void c5_runtime(const DeskRun& run) {
  line("C5 runtime", run.seconds < kDeskMinutes * 60,
       "desk fixture (200 images, 60 epochs) took " + fmt("%.1f", run.seconds / 60) + " min (limit 30 min)");
}

void c6(const DeskRun& full, const DeskRun& u_only) {
  const double a = full.history.back().fused.f1, b = u_only.history.back().fused.f1;
  line("C6 utility ablation", a >= b, "F1(U+A+G) " + fmt("%.4f", a) + " vs F1(U) " + fmt("%.4f", b));
}

// ---- C7 ---------------------------------------------------------------------
void c7() {
  const Dataset ds = synth_dataset(SceneParams{}, 1000, 7);
  const StatsReport r = dataset_stats(ds);
  // Generator metadata, reported next to the mask-based count.
  int single_meta = 0;
  for (const auto& s : ds.items) single_meta += s.meta->targets.size() == 1;
  const double single = r.single_target_fraction(), small = r.fraction_area_below(100),
               low = r.fraction_scr_below(5.0);
  const bool ok = single >= kSingleLow && single <= kSingleHigh && small > kSmallAreaMin && low >= kLowScrLow &&
                  low <= kLowScrHigh;
  line("C7 generator calibration", ok,
       "single-target " + fmt("%.3f", single) + " [0.75, 0.85], area < 100 px " + fmt("%.3f", small) +
           " (> 0.90), SCR < 5 " + fmt("%.3f", low) + " [0.60, 0.80]; generator metadata single-target " +
           fmt("%.3f", single_meta / 1000.0));
}

// ---- C8 ---------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PIXELGAME_CLI_PATH + "\" " + args + " > /dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void c8(const fs::path& work) {
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "scene.cfg") << "image_size = 24\narea_max = 12\narea_median = 4\n";
  std::ofstream(dir / "run.cfg") << "epochs = 2\nbatch_size = 4\ncrop = 16\nresize = 16\ntrain_data = synth:10\n"
                                 << "scene_params = " << (dir / "scene.cfg").string() << "\n";
  std::ofstream(dir / "plan.cfg") << "axis = utility_components\nlevels = U, U+A+G\nepochs = 2\nbatch_size = 4\n"
                                  << "crop = 16\nresize = 16\ntrain_data = synth:10\n"
                                  << "scene_params = " << (dir / "scene.cfg").string() << "\n";
  const std::string cfg = "\"" + (dir / "run.cfg").string() + "\"";
  const std::string plan = "\"" + (dir / "plan.cfg").string() + "\"";
  int rc = 0;
  rc |= run_cli("train --config " + cfg + " --seed 17 --out \"" + (dir / "t1").string() + "\"");
  rc |= run_cli("train --config " + cfg + " --seed 17 --out \"" + (dir / "t2").string() + "\"");
  rc |= run_cli("ablate " + plan + " --seed 17 --out \"" + (dir / "a1").string() + "\"");
  rc |= run_cli("ablate " + plan + " --seed 17 --out \"" + (dir / "a2").string() + "\"");
  std::vector<std::pair<fs::path, fs::path>> pairs = {
      {dir / "t1" / "history.csv", dir / "t2" / "history.csv"},
      {dir / "a1" / "ablation.csv", dir / "a2" / "ablation.csv"},
      {dir / "a1" / "U" / "history.csv", dir / "a2" / "U" / "history.csv"},
      {dir / "a1" / "U+A+G" / "history.csv", dir / "a2" / "U+A+G" / "history.csv"}};
  int identical = 0;
  for (const auto& [a, b] : pairs) {
    const std::string x = slurp(a), y = slurp(b);
    identical += !x.empty() && x == y;
  }
  // A different seed must change the history, or the comparison is vacuous.
  rc |= run_cli("train --config " + cfg + " --seed 18 --out \"" + (dir / "t3").string() + "\"");
  const bool differs = slurp(dir / "t3" / "history.csv") != slurp(dir / "t1" / "history.csv");
  line("C8 seeded determinism", rc == 0 && identical == 4 && differs,
       std::to_string(identical) + "/4 CSV pairs byte-identical (train history, ablation table, 2 level histories)" +
           (differs ? "; another seed differs" : "; another seed gave the SAME history") +
           (rc ? "; a CLI run failed" : ""));
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "pixelgame_acceptance";
  std::set<std::string> want;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workdir" && i + 1 < argc) {
      work = argv[++i];
    } else {
      want.insert(a);
    }
  }
  const bool all = want.empty();
  const auto on = [&](const char* c) { return all || want.count(c); };
  fs::create_directories(work);

  if (on("c1")) c1();
  if (on("c2")) c2();
  if (on("c3")) c3();
  if (on("c4")) c4();
  // train-desk runs the desk fixture once and stores it; c5, c5-runtime and
  // c6 then judge the stored run (training afresh only when none exists).
  if (want.count("train-desk")) {
    const DeskRun run = run_desk(work, "U+A+G");
    std::printf("desk fixture trained in %.1f min\n", run.seconds / 60);
  }
  if (on("c5") || on("c5-runtime") || on("c6")) {
    const DeskRun full = desk(work, "U+A+G", true);
    if (on("c5")) c5(full);
    if (on("c5-runtime")) c5_runtime(full);
    if (on("c6")) c6(full, desk(work, "U", false));
  }
  if (on("c7")) c7();
  if (on("c8")) c8(work);

  std::printf("%s\n", g_failures == 0 ? "acceptance: all selected criteria passed"
                                      : ("acceptance: " + std::to_string(g_failures) + " criterion line(s) failed").c_str());
  return g_failures == 0 ? 0 : 1;
}
