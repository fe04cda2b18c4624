#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "pixelgame/error.hpp"
#include "pixelgame/metrics.hpp"
#include "pixelgame/scr.hpp"

using namespace pixelgame;
using testutil::mask;
using testutil::prob;

TEST_SUITE("metrics") {
  TEST_CASE("hand-counted confusion table") {
    const BinaryMask pred = mask(2, 3, {1, 1, 0, 0, 1, 0});
    const BinaryMask gt = mask(2, 3, {1, 0, 0, 1, 1, 0});
    const ConfusionCounts c = confusion_counts(pred, gt);
    CHECK(c.tps == 2);
    CHECK(c.fps == 1);
    CHECK(c.fns == 1);
    CHECK(c.tns == 2);
    CHECK(c.n == 6);
    const MetricReport m = metrics(c);
    CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall == doctest::Approx(2.0 / 3.0));
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(m.iou == doctest::Approx(0.5));
  }

  TEST_CASE("zero over zero reports zero") {
    const BinaryMask empty = mask(2, 2, {0, 0, 0, 0});
    const MetricReport m = metrics(confusion_counts(empty, empty));
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK(m.iou == 0.0);
  }

  TEST_CASE("perfect prediction scores one") {
    std::mt19937_64 rng(5);
    BinaryMask g = testutil::random_mask(6, 6, rng);
    g(0, 0) = 1;
    const MetricReport m = metrics(confusion_counts(g, g));
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.iou == 1.0);
  }

  TEST_CASE("soft counts equal hard counts on binary probabilities") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      const BinaryMask p = testutil::random_mask(5, 4, rng, 2);
      const BinaryMask g = testutil::random_mask(5, 4, rng, 2);
      ProbabilityMap o(5, 4);
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = p[i];
      CHECK(soft_confusion_counts(o, g) == confusion_counts(p, g));
    }
  }

  TEST_CASE("soft counts partition the pixel count") {
    std::mt19937_64 rng(11);
    const ProbabilityMap o = testutil::random_prob(7, 7, rng);
    const BinaryMask g = testutil::random_mask(7, 7, rng);
    const ConfusionCounts c = soft_confusion_counts(o, g);
    CHECK(c.tps + c.fps + c.fns + c.tns == doctest::Approx(49.0));
  }

  TEST_CASE("binarize threshold is inclusive") {
    const BinaryMask b = binarize(prob(1, 4, {0.49, 0.5, 0.51, 1.0}));
    CHECK(b[0] == 0);
    CHECK(b[1] == 1);
    CHECK(b[2] == 1);
    CHECK(b[3] == 1);
    CHECK_THROWS_AS(binarize(prob(1, 1, {0.5}), 1.0), Error);
  }

  TEST_CASE("shape mismatch is a dimension error") {
    try {
      confusion_counts(mask(1, 2, {0, 1}), mask(2, 1, {0, 1}));
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Dimension);
    }
  }

  TEST_CASE("average is the arithmetic mean of reports") {
    const MetricReport a{1.0, 0.0, 0.5, 0.25};
    const MetricReport b{0.0, 1.0, 0.5, 0.75};
    const MetricReport reports[] = {a, b};
    const MetricReport m = average(reports);
    CHECK(m.precision == 0.5);
    CHECK(m.recall == 0.5);
    CHECK(m.f1 == 0.5);
    CHECK(m.iou == 0.5);
  }
}

TEST_SUITE("scr") {
  // Straightforward re-evaluation: mean inside the mask, population statistics
  // over the explicitly enumerated window minus the mask.
  SCRStats scr_oracle(const GrayImage& img, const BinaryMask& m, const BoxRegion& win) {
    double st = 0.0;
    int nt = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i]) {
        st += img[i];
        ++nt;
      }
    }
    std::vector<double> bg;
    for (int y = win.y0; y <= win.y1; ++y)
      for (int x = win.x0; x <= win.x1; ++x)
        if (!m(y, x)) bg.push_back(img(y, x));
    double mu = 0.0;
    for (double v : bg) mu += v;
    mu /= static_cast<double>(bg.size());
    double var = 0.0;
    for (double v : bg) var += (v - mu) * (v - mu);
    const double sigma = std::sqrt(var / static_cast<double>(bg.size()));
    return {st / nt, mu, sigma, std::abs(st / nt - mu) / sigma};
  }

  TEST_CASE("neighborhood grows by ceil((sqrt3-1)*extent/2) per side") {
    // 3x3 box: ceil(0.366 * 3) = 2 pixels per side.
    const BoxRegion w = scr_neighborhood({10, 10, 12, 12}, 40, 40);
    CHECK(w.y0 == 8);
    CHECK(w.x0 == 8);
    CHECK(w.y1 == 14);
    CHECK(w.x1 == 14);
    // A single pixel still grows by one.
    const BoxRegion one = scr_neighborhood({5, 5, 5, 5}, 40, 40);
    CHECK(one.y0 == 4);
    CHECK(one.y1 == 6);
    // Clipped at the border.
    const BoxRegion edge = scr_neighborhood({0, 0, 2, 2}, 4, 4);
    CHECK(edge.y0 == 0);
    CHECK(edge.x0 == 0);
    CHECK(edge.y1 == 3);
    CHECK(edge.x1 == 3);
  }

  TEST_CASE("scr matches a direct evaluation on random scenes") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      GrayImage img(24, 24);
      for (auto& v : img.values()) v = u(rng);
      BinaryMask m(24, 24);
      const int y0 = 5 + static_cast<int>(rng() % 10), x0 = 5 + static_cast<int>(rng() % 10);
      const int h = 1 + static_cast<int>(rng() % 4), w = 1 + static_cast<int>(rng() % 4);
      for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) m(y, x) = 1;
      const SCRStats got = scr(img, m);
      const SCRStats want = scr_oracle(img, m, scr_neighborhood({y0, x0, y0 + h - 1, x0 + w - 1}, 24, 24));
      CHECK(got.mu_t == doctest::Approx(want.mu_t).epsilon(1e-12));
      CHECK(got.mu_c == doctest::Approx(want.mu_c).epsilon(1e-12));
      CHECK(got.sigma_c == doctest::Approx(want.sigma_c).epsilon(1e-12));
      CHECK(got.scr == doctest::Approx(want.scr).epsilon(1e-12));
    }
  }

  TEST_CASE("hand example") {
    // Target 1.0 on one pixel; its 3x3 window has background 0.2 x4 and 0.4 x4.
    GrayImage img(3, 3, {0.2, 0.4, 0.2, 0.4, 1.0, 0.4, 0.2, 0.4, 0.2});
    BinaryMask m(3, 3);
    m(1, 1) = 1;
    const SCRStats s = scr(img, m);
    CHECK(s.mu_t == doctest::Approx(1.0));
    CHECK(s.mu_c == doctest::Approx(0.3));
    CHECK(s.sigma_c == doctest::Approx(0.1));
    CHECK(s.scr == doctest::Approx(7.0));
  }

  TEST_CASE("empty target and flat background are typed errors") {
    GrayImage flat(5, 5, 0.5);
    BinaryMask none(5, 5);
    try {
      scr(flat, none);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyTarget);
    }
    BinaryMask one(5, 5);
    one(2, 2) = 1;
    flat(2, 2) = 0.9;
    try {
      scr(flat, one);
      FAIL("expected throw");
    } catch (const DegenerateBackgroundError& e) {
      CHECK(e.mu_t == doctest::Approx(0.9));
      CHECK(e.mu_c == doctest::Approx(0.5));
    }
  }
}
