#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pixelgame/image.hpp"
#include "pixelgame/metrics.hpp"

namespace pixelgame {

/// Smoothing added to every count denominator that can vanish.
inline constexpr double kSmoothing = 1e-6;

/// Which terms of the total utility are switched on.
struct UtilityComponents {
  bool player = true;  // U
  bool game = true;    // G
  bool area = true;    // A

  static UtilityComponents all() { return {}; }
  /// Parses "U", "U+A", "U+G", "U+A+G" (any order, '+' or ',' separated).
  static UtilityComponents parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const UtilityComponents&) const = default;
};

/// Per-player objectives (phi_k = u_k + g + a_k) or one shared objective
/// (u1 + u2 + g + A(mean(o1, o2))) minimized by both players.
enum class UtilitySharing { PerPlayer, Shared };

struct UtilityBundle {
  double u1 = 0.0;
  double u2 = 0.0;
  double g = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
};

/// dphi_k / do_j for both players, row-major per pixel.
struct UtilityGradients {
  std::vector<double> phi1_o1;
  std::vector<double> phi1_o2;
  std::vector<double> phi2_o1;
  std::vector<double> phi2_o2;
};

enum class LossKind { Game, Dice, Iou, Ss };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::Game;
  double ss_lambda = 0.5;
};

// FNs / (TNs + FNs) on soft counts.
double fns_player_utility(const ProbabilityMap& o1, const BinaryMask& g);
// FPs / (TPs + FPs) on soft counts.
double fps_player_utility(const ProbabilityMap& o2, const BinaryMask& g);
/// ||(o1 - g) .* (o2 - g)||_2 / sqrt(N).
double game_utility(const ProbabilityMap& o1, const ProbabilityMap& o2, const BinaryMask& g);
double area_constraint(const ProbabilityMap& o);

std::vector<double> fns_player_utility_grad(const ProbabilityMap& o1, const BinaryMask& g);
std::vector<double> fps_player_utility_grad(const ProbabilityMap& o2, const BinaryMask& g);
/// Gradients with respect to o1 and o2. Zero where the error product vanishes.
void game_utility_grad(const ProbabilityMap& o1, const ProbabilityMap& o2, const BinaryMask& g,
                       std::vector<double>& d_o1, std::vector<double>& d_o2);
std::vector<double> area_constraint_grad(const ProbabilityMap& o);

UtilityBundle total_utility(const ProbabilityMap& o1, const ProbabilityMap& o2,
                            const BinaryMask& g,
                            UtilityComponents components = UtilityComponents::all(),
                            UtilitySharing sharing = UtilitySharing::PerPlayer,
                            UtilityGradients* grads = nullptr);

/// Dice, IoU or sensitivity-specificity loss. LossKind::Game is a config error
/// here; the game objective lives in total_utility().
double combined_loss(const LossSpec& spec, const ProbabilityMap& o, const BinaryMask& g);
std::vector<double> combined_loss_grad(const LossSpec& spec, const ProbabilityMap& o,
                                       const BinaryMask& g);

/// A scalar function of a flat input vector together with its analytic gradient.
struct NamedScalarFunction {
  std::string name;
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

/// Relative error used by the gradient checks: |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-8);

/// Central differences with step h at `inputs`; returns the maximum relative
/// error over all coordinates.
double gradient_check(const NamedScalarFunction& loss, std::span<const double> inputs, double step);

}  // namespace pixelgame
