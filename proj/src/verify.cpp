#include "pixelgame/verify.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "pixelgame/metrics.hpp"
#include "pixelgame/utility.hpp"

namespace pixelgame {

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

ProbabilityMap random_map(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  ProbabilityMap m(h, w);
  for (auto& v : m.values()) v = u(rng);
  return m;
}

BinaryMask random_mask(int h, int w, std::mt19937_64& rng) {
  BinaryMask m(h, w);
  for (auto& v : m.values()) v = static_cast<std::uint8_t>(rng() % 4 == 0);
  m(0, 0) = 1;
  m(h - 1, w - 1) = 0;
  return m;
}

ProbabilityMap as_map(std::span<const double> v, int h, int w) {
  return ProbabilityMap(h, w, std::vector<double>(v.begin(), v.end()));
}

// Independent per-pixel enumeration of Table-III outcomes.
VerifyCheck check_metric_bruteforce() {
  long mismatches = 0;
  for (int a = 0; a < 512; ++a) {
    BinaryMask pred(3, 3);
    for (int i = 0; i < 9; ++i) pred[i] = (a >> i) & 1;
    for (int b = 0; b < 512; ++b) {
      BinaryMask gt(3, 3);
      int tp = 0, fp = 0, fn = 0, tn = 0;
      for (int i = 0; i < 9; ++i) {
        gt[i] = (b >> i) & 1;
        const bool p = (a >> i) & 1, g = (b >> i) & 1;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
        tn += !p && !g;
      }
      const ConfusionCounts c = confusion_counts(pred, gt);
      const MetricReport m = metrics(c);
      const double P = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
      const double R = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
      const double F = P + R > 0.0 ? 2.0 * P * R / (P + R) : 0.0;
      const double I = tp + fp + fn ? static_cast<double>(tp) / (tp + fp + fn) : 0.0;
      if (c.tps != tp || c.fps != fp || c.fns != fn || c.tns != tn || m.precision != P ||
          m.recall != R || m.f1 != F || m.iou != I) {
        ++mismatches;
      }
    }
  }
  return {"metric brute force (all 3x3 mask pairs)", mismatches == 0,
          std::to_string(512L * 512L) + " pairs, " + std::to_string(mismatches) + " mismatches"};
}

VerifyCheck gradient_case(const std::string& name, const NamedScalarFunction& f,
                          const std::vector<double>& x) {
  const double err = gradient_check(f, x, 1e-5);
  return {"gradient " + name, err < kGradientTolerance, "max rel err " + sci(err)};
}

std::vector<VerifyCheck> check_utility_gradients() {
  constexpr int H = 8, W = 8;
  std::mt19937_64 rng(101);
  const BinaryMask g = random_mask(H, W, rng);
  const ProbabilityMap o1 = random_map(H, W, rng);
  const ProbabilityMap o2 = random_map(H, W, rng);
  const std::vector<double> x1(o1.values().begin(), o1.values().end());
  const std::vector<double> x2(o2.values().begin(), o2.values().end());

  std::vector<VerifyCheck> out;
  out.push_back(gradient_case(
      "fns_player_utility",
      {"u1", [&](std::span<const double> v) { return fns_player_utility(as_map(v, H, W), g); },
       [&](std::span<const double> v) { return fns_player_utility_grad(as_map(v, H, W), g); }},
      x1));
  out.push_back(gradient_case(
      "fps_player_utility",
      {"u2", [&](std::span<const double> v) { return fps_player_utility(as_map(v, H, W), g); },
       [&](std::span<const double> v) { return fps_player_utility_grad(as_map(v, H, W), g); }},
      x2));
  out.push_back(gradient_case(
      "game_utility (o1)",
      {"g1", [&](std::span<const double> v) { return game_utility(as_map(v, H, W), o2, g); },
       [&](std::span<const double> v) {
         std::vector<double> d1, d2;
         game_utility_grad(as_map(v, H, W), o2, g, d1, d2);
         return d1;
       }},
      x1));
  out.push_back(gradient_case(
      "game_utility (o2)",
      {"g2", [&](std::span<const double> v) { return game_utility(o1, as_map(v, H, W), g); },
       [&](std::span<const double> v) {
         std::vector<double> d1, d2;
         game_utility_grad(o1, as_map(v, H, W), g, d1, d2);
         return d2;
       }},
      x2));
  out.push_back(gradient_case(
      "area_constraint",
      {"a", [&](std::span<const double> v) { return area_constraint(as_map(v, H, W)); },
       [&](std::span<const double> v) { return area_constraint_grad(as_map(v, H, W)); }},
      x1));
  for (LossKind kind : {LossKind::Dice, LossKind::Iou, LossKind::Ss}) {
    const LossSpec spec{kind, 0.5};
    out.push_back(gradient_case(
        std::string(to_string(kind)) + " loss",
        {std::string(to_string(kind)),
         [&, spec](std::span<const double> v) { return combined_loss(spec, as_map(v, H, W), g); },
         [&, spec](std::span<const double> v) { return combined_loss_grad(spec, as_map(v, H, W), g); }},
        x1));
  }
  return out;
}

VerifyCheck check_mim_gates() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_sum = 0.0;
  bool m3_ok = true, v2_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const int C = 1 + static_cast<int>(rng() % 8);
    const int H = 1 + static_cast<int>(rng() % 5);
    const int W = 1 + static_cast<int>(rng() % 5);
    MIMParams p("mim", C);
    p.init(rng, 0.5);
    FeatureMap x(Shape{1, C, H, W});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 3.0 * normal(rng);
    const auto v1 = spatial_channel_attention(x, p);
    const auto v2 = gmp_attention(x);
    const auto m2 = channel_gate(v1, v2, p);
    const auto m3 = spatial_gate(x);
    double sum = 0.0;
    for (double v : m2) sum += v;
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    for (double v : m3) m3_ok = m3_ok && v > 0.0 && v < 1.0;
    for (double v : v2) v2_ok = v2_ok && v > 0.0 && v < 1.0;
  }
  return {"MIM gate invariants (1000 random inputs)", worst_sum < 1e-6 && m3_ok && v2_ok,
          "max |sum m2 - 1| " + sci(worst_sum) + (m3_ok ? ", m3 in (0,1)" : ", m3 OUT OF RANGE") +
              (v2_ok ? ", v2 in (0,1)" : ", v2 OUT OF RANGE")};
}

// Scalar re-derivation of the block for the fixed 2x2x2 case.
VerifyCheck check_mim_oracle() {
  constexpr int C = 2, P = 4;
  const double x[C][P] = {{0.5, -1.0, 2.0, 0.25}, {-0.5, 1.5, 0.0, 1.0}};
  MIMParams p("mim", C);
  const int S = p.squeeze_channels();  // 1
  const double ws[C] = {0.3, -0.2};
  const double wq[2 * C] = {0.1, -0.4, 0.25, 0.5};
  const double we[C] = {0.7, -0.3};
  const double be[C] = {0.05, -0.1};
  p.pw_spatial.weight.value[0] = ws[0];
  p.pw_spatial.weight.value[1] = ws[1];
  for (int i = 0; i < 2 * C; ++i) p.pw_squeeze.weight.value[i] = wq[i];
  for (int c = 0; c < C; ++c) {
    p.pw_excite.weight.value[c] = we[c];
    p.pw_excite.bias.value[c] = be[c];
  }
  p.bn_spatial.gamma.value[0] = 1.5;
  p.bn_spatial.beta.value[0] = 0.1;
  p.bn_spatial.running_mean[0] = 0.2;
  p.bn_spatial.running_var[0] = 0.5;
  p.bn_squeeze.gamma.value[0] = 0.8;
  p.bn_squeeze.beta.value[0] = -0.05;
  p.bn_squeeze.running_mean[0] = 0.1;
  p.bn_squeeze.running_var[0] = 2.0;

  const auto lrelu = [](double v) { return v < 0 ? 0.01 * v : v; };
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double y[P], soft[P], total = 0.0;
  for (int i = 0; i < P; ++i) {
    const double conv = ws[0] * x[0][i] + ws[1] * x[1][i];
    y[i] = lrelu(1.5 * (conv - 0.2) / std::sqrt(0.5 + 1e-5) + 0.1);
    total += std::exp(y[i]);
  }
  for (int i = 0; i < P; ++i) soft[i] = std::exp(y[i]) / total;
  double m1[2 * C];
  for (int c = 0; c < C; ++c) {
    double v1 = 0.0, mx = x[c][0];
    for (int i = 0; i < P; ++i) {
      v1 += x[c][i] * soft[i];
      mx = std::max(mx, x[c][i]);
    }
    m1[c] = v1;
    m1[C + c] = sig(mx);
  }
  double q = 0.0;
  for (int k = 0; k < 2 * C; ++k) q += wq[k] * m1[k];
  q = lrelu(0.8 * (q - 0.1) / std::sqrt(2.0 + 1e-5) - 0.05);
  double e[C], esum = 0.0;
  for (int c = 0; c < C; ++c) {
    e[c] = std::exp(we[c] * q + be[c]);
    esum += e[c];
  }
  double worst = 0.0;
  FeatureMap fx(Shape{1, C, 2, 2});
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < P; ++i) fx.channel(0, c)[i] = x[c][i];
  const FeatureMap z = mim_forward(fx, p);
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < P; ++i) {
      const double m3 = sig(std::max(x[0][i], x[1][i]));
      const double expected = (e[c] / esum + m3) * x[c][i];
      worst = std::max(worst, std::abs(expected - z.channel(0, c)[i]));
    }
  }
  return {"MIM hand oracle (2x2x2, squeeze " + std::to_string(S) + ")", worst < 1e-12,
          "max abs diff " + sci(worst)};
}

}  // namespace

// The summed loss is O(10), so central differences carry ~1e-10 of round-off.
// Gradients smaller than this floor are therefore compared in absolute terms.
constexpr double kNetworkFloor = 1e-5;

double network_gradient_error(const FdcnSpec& spec, bool use_mim, int size, int samples,
                              std::uint64_t seed, double step) {
  PlayerNetwork<double> net(spec, use_mim, seed);
  std::mt19937_64 rng(seed ^ 0xABCDEFULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Perturb the affine BN parameters and MIM biases away from their neutral
  // initial values so every path carries signal.
  for (auto* p : net.params()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] += 0.1 * normal(rng);
  }
  Tensor<double> x(Shape{2, 1, size, size});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::uniform_real_distribution<double>(0, 1)(rng);
  Tensor<double> r(Shape{2, 1, size, size});
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = normal(rng);

  const auto loss = [&]() {
    const Tensor<double> prob = net.forward(x, true, false);
    double s = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) s += r[i] * prob[i];
    return s;
  };
  net.zero_grad();
  net.forward(x, true, true);
  const Tensor<double> dx = net.backward(r, true);

  double worst = 0.0;
  const auto probe = [&](double& value, double analytic) {
    const double saved = value;
    value = saved + step;
    const double up = loss();
    value = saved - step;
    const double down = loss();
    value = saved;
    worst = std::max(worst, relative_error(analytic, (up - down) / (2.0 * step), kNetworkFloor));
  };
  auto params = net.params();
  for (auto* p : params) {
    const std::size_t i = static_cast<std::size_t>(rng() % p->value.size());
    probe(p->value[i], p->grad[i]);
  }
  for (int k = 0; k < samples; ++k) {
    Param<double>* p = params[rng() % params.size()];
    const std::size_t i = static_cast<std::size_t>(rng() % p->value.size());
    probe(p->value[i], p->grad[i]);
  }
  for (int k = 0; k < samples; ++k) {
    const std::size_t i = static_cast<std::size_t>(rng() % x.size());
    probe(x[i], dx[i]);
  }
  return worst;
}

double mim_gradient_error(int channels, int size, std::uint64_t seed, double step) {
  MimBlock<double> block("mim", channels);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  block.init(rng, 0.3);
  std::vector<Param<double>*> params;
  block.params(params);
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] += 0.1 * normal(rng);
  }
  Tensor<double> x(Shape{1, channels, size, size});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = normal(rng);
  Tensor<double> r(x.shape());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = normal(rng);
  const double scale = 1.0 / static_cast<double>(x.size());

  const auto loss = [&]() {
    const Tensor<double> z = block.forward(x, false, false);
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += r[i] * z[i];
    return s * scale;
  };
  for (auto* p : params) p->zero_grad();
  block.forward(x, false, true);
  Tensor<double> dz(x.shape());
  for (std::size_t i = 0; i < dz.size(); ++i) dz[i] = r[i] * scale;
  const Tensor<double> dx = block.backward(x, dz);

  double worst = 0.0;
  const auto probe = [&](double& value, double analytic) {
    const double saved = value;
    value = saved + step;
    const double up = loss();
    value = saved - step;
    const double down = loss();
    value = saved;
    worst = std::max(worst, relative_error(analytic, (up - down) / (2.0 * step)));
  };
  for (std::size_t i = 0; i < x.size(); ++i) probe(x[i], dx[i]);
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) probe(p->value[i], p->grad[i]);
  }
  return worst;
}

std::vector<VerifyCheck> run_verify(const std::function<void(const VerifyCheck&)>& on_check) {
  std::vector<VerifyCheck> out;
  const auto add = [&](VerifyCheck c) {
    if (on_check) on_check(c);
    out.push_back(std::move(c));
  };

  add(check_metric_bruteforce());
  for (auto& c : check_utility_gradients()) add(std::move(c));
  add(check_mim_gates());
  add(check_mim_oracle());
  {
    const double err = mim_gradient_error(4, 8, 303, 1e-5);
    add({"gradient MIM block (4x8x8, x and all parameters)", err < kGradientTolerance,
         "max rel err " + sci(err)});
  }
  {
    const FdcnSpec stub = FdcnSpec::from_dilations({1, 2, 1}, 4);
    const double err = network_gradient_error(stub, false, 8, 24, 404, 1e-5);
    add({"gradient FDCN stub (3 layers, 8x8)", err < kGradientTolerance, "max rel err " + sci(err)});
  }
  {
    const FdcnSpec stub = FdcnSpec::from_dilations({1, 2, 4, 2, 1}, 4);
    const double err = network_gradient_error(stub, true, 8, 24, 505, 1e-5);
    add({"gradient FDCN stub with MIM skips (5 layers, 8x8)", err < kGradientTolerance,
         "max rel err " + sci(err)});
  }

  const FdcnSpec f9 = FdcnSpec::fdcn9();
  const FdcnSpec f13 = FdcnSpec::fdcn13();
  {
    const bool ok = f9.dilations() == std::vector<int>{1, 2, 4, 8, 16, 8, 4, 2, 1} &&
                    f13.dilations() == std::vector<int>{1, 2, 4, 8, 16, 32, 64, 32, 16, 8, 4, 2, 1} &&
                    f9.channels == 128 && f13.channels == 64;
    add({"FDCN9/FDCN13 layer tables", ok, "channels 128 / 64"});
  }
  {
    const int rf9 = receptive_field(f9), rf13 = receptive_field(f13);
    add({"receptive fields", rf9 == 93 && rf13 == 381,
         "FDCN9 " + std::to_string(rf9) + " px, FDCN13 " + std::to_string(rf13) + " px"});
  }
  {
    const auto conv_weights = [](const FdcnSpec& s) {
      std::size_t total = 0, in = 1;
      for (const auto& l : s.layers) {
        total += in * 9 * static_cast<std::size_t>(l.out_channels);
        in = l.out_channels;
      }
      return total + static_cast<std::size_t>(s.channels);  // 1x1 head
    };
    const std::size_t w9 = conv_weights(f9), w13 = conv_weights(f13);
    add({"conv weight counts", w9 == 1180928 && w13 == 443008,
         "FDCN9 " + std::to_string(w9) + ", FDCN13 " + std::to_string(w13)});
  }
  {
    PlayerNetwork<float> p1(f9, true, 1), p2(f13, true, 2);
    const std::size_t built = p1.parameter_count() + p2.parameter_count();
    const std::size_t analytic = parameter_count(f9, true) + parameter_count(f13, true);
    const bool ok = built == analytic && built >= 1500000 && built <= 1900000;
    add({"two-player parameter count", ok,
         std::to_string(built) + " (band [1.5M, 1.9M], reference 1.69M)"});
  }
  return out;
}

}  // namespace pixelgame
