#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pixelgame/fdcn.hpp"

namespace pixelgame {

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Relative-error budget for the analytic-vs-numeric gradient checks.
inline constexpr double kGradientTolerance = 1e-4;

/// Worst relative error of dL/dtheta for a small double-precision player:
/// L = sum(r .* prob) with fixed random weights r, checked on one element of
/// every parameter tensor, `samples` further random parameters and `samples`
/// input pixels. Gradients below 1e-5 are compared in absolute terms.
double network_gradient_error(const FdcnSpec& spec, bool use_mim, int size, int samples,
                              std::uint64_t seed, double step);

/// Worst relative error of d mean(r .* z) / d(x, params) for one MIM block.
double mim_gradient_error(int channels, int size, std::uint64_t seed, double step);

/// Numerics gate: metric brute force, utility and loss gradient checks, MIM
/// gate invariants and oracle, FDCN stub gradients, receptive fields and
/// parameter counts. `on_check` sees each result as it completes.
std::vector<VerifyCheck> run_verify(const std::function<void(const VerifyCheck&)>& on_check = {});

}  // namespace pixelgame
