#include "pixelgame/utility.hpp"

#include <algorithm>
#include <cmath>

namespace pixelgame {

UtilityComponents UtilityComponents::parse(std::string_view text) {
  UtilityComponents c{false, false, false};
  std::string token;
  const auto flush = [&] {
    if (token.empty()) return;
    if (token == "U") c.player = true;
    else if (token == "G") c.game = true;
    else if (token == "A") c.area = true;
    else fail(ErrorKind::Config, "unknown utility component '" + token + "'");
    token.clear();
  };
  for (char ch : text) {
    if (ch == '+' || ch == ',' || ch == ' ') flush();
    else token.push_back(ch);
  }
  flush();
  if (!c.player && !c.game && !c.area) {
    fail(ErrorKind::Config, "utility components must name at least one of U, G, A");
  }
  return c;
}

std::string UtilityComponents::to_string() const {
  std::string out;
  const auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += "+";
    out += name;
  };
  add(player, "U");
  add(area, "A");
  add(game, "G");
  return out;
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Game: return "game";
    case LossKind::Dice: return "dice";
    case LossKind::Iou: return "iou";
    case LossKind::Ss: return "ss";
  }
  return "game";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "game") return LossKind::Game;
  if (name == "dice") return LossKind::Dice;
  if (name == "iou") return LossKind::Iou;
  if (name == "ss") return LossKind::Ss;
  fail(ErrorKind::Config, "unknown loss kind '" + std::string(name) + "'");
}

namespace {

inline double bit(const BinaryMask& g, std::size_t i) { return g[i] != 0 ? 1.0 : 0.0; }

}  // namespace

double fns_player_utility(const ProbabilityMap& o1, const BinaryMask& g) {
  const ConfusionCounts c = soft_confusion_counts(o1, g);
  return c.fns / (c.tns + c.fns + kSmoothing);
}

double fps_player_utility(const ProbabilityMap& o2, const BinaryMask& g) {
  const ConfusionCounts c = soft_confusion_counts(o2, g);
  return c.fps / (c.tps + c.fps + kSmoothing);
}

double game_utility(const ProbabilityMap& o1, const ProbabilityMap& o2, const BinaryMask& g) {
  require_same_shape(o1, g, "game_utility");
  require_same_shape(o2, g, "game_utility");
  double sq = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double e = (o1[i] - bit(g, i)) * (o2[i] - bit(g, i));
    sq += e * e;
  }
  return std::sqrt(sq) / std::sqrt(static_cast<double>(g.size()));
}

double area_constraint(const ProbabilityMap& o) {
  double sum = 0.0;
  for (double v : o.values()) sum += v;
  return sum / static_cast<double>(o.size());
}

std::vector<double> fns_player_utility_grad(const ProbabilityMap& o1, const BinaryMask& g) {
  const ConfusionCounts c = soft_confusion_counts(o1, g);
  const double den = c.tns + c.fns + kSmoothing;
  std::vector<double> d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = (c.fns - bit(g, i) * den) / (den * den);
  return d;
}

std::vector<double> fps_player_utility_grad(const ProbabilityMap& o2, const BinaryMask& g) {
  const ConfusionCounts c = soft_confusion_counts(o2, g);
  const double den = c.tps + c.fps + kSmoothing;
  std::vector<double> d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    d[i] = ((1.0 - bit(g, i)) * den - c.fps) / (den * den);
  }
  return d;
}

void game_utility_grad(const ProbabilityMap& o1, const ProbabilityMap& o2, const BinaryMask& g,
                       std::vector<double>& d_o1, std::vector<double>& d_o2) {
  require_same_shape(o1, g, "game_utility_grad");
  require_same_shape(o2, g, "game_utility_grad");
  const std::size_t n = g.size();
  d_o1.assign(n, 0.0);
  d_o2.assign(n, 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = (o1[i] - bit(g, i)) * (o2[i] - bit(g, i));
    sq += e * e;
  }
  const double norm = std::sqrt(sq);
  if (norm == 0.0) return;
  const double scale = 1.0 / (norm * std::sqrt(static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const double r1 = o1[i] - bit(g, i);
    const double r2 = o2[i] - bit(g, i);
    const double e = r1 * r2;
    d_o1[i] = e * r2 * scale;
    d_o2[i] = e * r1 * scale;
  }
}

std::vector<double> area_constraint_grad(const ProbabilityMap& o) {
  return std::vector<double>(o.size(), 1.0 / static_cast<double>(o.size()));
}

UtilityBundle total_utility(const ProbabilityMap& o1, const ProbabilityMap& o2,
                            const BinaryMask& g, UtilityComponents components,
                            UtilitySharing sharing, UtilityGradients* grads) {
  require_same_shape(o1, g, "total_utility");
  require_same_shape(o2, g, "total_utility");
  UtilityBundle b;
  if (components.player) {
    b.u1 = fns_player_utility(o1, g);
    b.u2 = fps_player_utility(o2, g);
  }
  if (components.game) b.g = game_utility(o1, o2, g);
  if (components.area) {
    b.a1 = area_constraint(o1);
    b.a2 = area_constraint(o2);
  }
  if (sharing == UtilitySharing::PerPlayer) {
    b.phi1 = b.u1 + b.g + b.a1;
    b.phi2 = b.u2 + b.g + b.a2;
  } else {
    b.phi1 = b.u1 + b.u2 + b.g + 0.5 * (b.a1 + b.a2);
    b.phi2 = b.phi1;
  }
  if (!grads) return b;

  const std::size_t n = g.size();
  std::vector<double> du1(n, 0.0), du2(n, 0.0), dg1(n, 0.0), dg2(n, 0.0), da(n, 0.0);
  if (components.player) {
    du1 = fns_player_utility_grad(o1, g);
    du2 = fps_player_utility_grad(o2, g);
  }
  if (components.game) game_utility_grad(o1, o2, g, dg1, dg2);
  if (components.area) da = area_constraint_grad(o1);

  grads->phi1_o1.assign(n, 0.0);
  grads->phi1_o2.assign(n, 0.0);
  grads->phi2_o1.assign(n, 0.0);
  grads->phi2_o2.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (sharing == UtilitySharing::PerPlayer) {
      grads->phi1_o1[i] = du1[i] + dg1[i] + da[i];
      grads->phi1_o2[i] = dg2[i];
      grads->phi2_o1[i] = dg1[i];
      grads->phi2_o2[i] = du2[i] + dg2[i] + da[i];
    } else {
      const double d1 = du1[i] + dg1[i] + 0.5 * da[i];
      const double d2 = du2[i] + dg2[i] + 0.5 * da[i];
      grads->phi1_o1[i] = d1;
      grads->phi1_o2[i] = d2;
      grads->phi2_o1[i] = d1;
      grads->phi2_o2[i] = d2;
    }
  }
  return b;
}

namespace {

struct Sums {
  double so = 0.0;
  double sg = 0.0;
  double sog = 0.0;
};

Sums sums(const ProbabilityMap& o, const BinaryMask& g) {
  Sums s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    s.so += o[i];
    s.sg += bit(g, i);
    s.sog += o[i] * bit(g, i);
  }
  return s;
}

void require_combined(const LossSpec& spec) {
  if (spec.kind == LossKind::Game) {
    fail(ErrorKind::Config, "combined_loss: the game objective is not a combined loss");
  }
  if (!(spec.ss_lambda >= 0.0 && spec.ss_lambda <= 1.0)) {
    fail(ErrorKind::Config, "ss_lambda must lie in [0,1]");
  }
}

}  // namespace

double combined_loss(const LossSpec& spec, const ProbabilityMap& o, const BinaryMask& g) {
  require_same_shape(o, g, "combined_loss");
  require_combined(spec);
  const Sums s = sums(o, g);
  switch (spec.kind) {
    case LossKind::Dice: return 1.0 - 2.0 * s.sog / (s.so + s.sg + kSmoothing);
    case LossKind::Iou: return 1.0 - s.sog / (s.so + s.sg - s.sog + kSmoothing);
    case LossKind::Ss: {
      double pos = 0.0;
      double neg = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = o[i] - bit(g, i);
        pos += d * d * bit(g, i);
        neg += d * d * (1.0 - bit(g, i));
      }
      const double n_neg = static_cast<double>(g.size()) - s.sg;
      return spec.ss_lambda * pos / (s.sg + kSmoothing) +
             (1.0 - spec.ss_lambda) * neg / (n_neg + kSmoothing);
    }
    case LossKind::Game: break;
  }
  return 0.0;
}

std::vector<double> combined_loss_grad(const LossSpec& spec, const ProbabilityMap& o,
                                       const BinaryMask& g) {
  require_same_shape(o, g, "combined_loss_grad");
  require_combined(spec);
  const Sums s = sums(o, g);
  std::vector<double> d(g.size());
  switch (spec.kind) {
    case LossKind::Dice: {
      const double den = s.so + s.sg + kSmoothing;
      for (std::size_t i = 0; i < g.size(); ++i) {
        d[i] = -2.0 * (bit(g, i) * den - s.sog) / (den * den);
      }
      break;
    }
    case LossKind::Iou: {
      const double den = s.so + s.sg - s.sog + kSmoothing;
      for (std::size_t i = 0; i < g.size(); ++i) {
        d[i] = -(bit(g, i) * den - s.sog * (1.0 - bit(g, i))) / (den * den);
      }
      break;
    }
    case LossKind::Ss: {
      const double pos_den = s.sg + kSmoothing;
      const double neg_den = static_cast<double>(g.size()) - s.sg + kSmoothing;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = o[i] - bit(g, i);
        d[i] = spec.ss_lambda * 2.0 * r * bit(g, i) / pos_den +
               (1.0 - spec.ss_lambda) * 2.0 * r * (1.0 - bit(g, i)) / neg_den;
      }
      break;
    }
    case LossKind::Game: break;
  }
  return d;
}

double relative_error(double analytic, double numeric, double floor) {
  const double den = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / den;
}

double gradient_check(const NamedScalarFunction& loss, std::span<const double> inputs,
                      double step) {
  const std::vector<double> analytic = loss.gradient(inputs);
  if (analytic.size() != inputs.size()) {
    fail(ErrorKind::Dimension, "gradient_check: '" + loss.name + "' gradient has wrong length");
  }
  std::vector<double> x(inputs.begin(), inputs.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = loss.value(x);
    x[i] = saved - step;
    const double down = loss.value(x);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  return worst;
}

}  // namespace pixelgame
