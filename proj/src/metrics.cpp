#include "pixelgame/metrics.hpp"

namespace pixelgame {

ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "confusion_counts");
  // Integer tallies first so hard counts are exact.
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool g = gt[i] != 0;
    if (p && g) ++tp;
    else if (p) ++fp;
    else if (g) ++fn;
    else ++tn;
  }
  return {static_cast<double>(tp), static_cast<double>(fp), static_cast<double>(tn),
          static_cast<double>(fn), static_cast<double>(pred.size())};
}

ConfusionCounts soft_confusion_counts(const ProbabilityMap& prob, const BinaryMask& gt) {
  require_same_shape(prob, gt, "soft_confusion_counts");
  ConfusionCounts c;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double o = prob[i];
    const double g = gt[i] != 0 ? 1.0 : 0.0;
    c.tps += o * g;
    c.fps += o * (1.0 - g);
    c.fns += (1.0 - o) * g;
    c.tns += (1.0 - o) * (1.0 - g);
  }
  c.n = static_cast<double>(prob.size());
  return c;
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

MetricReport metrics(const ConfusionCounts& c) {
  MetricReport r;
  r.precision = ratio(c.tps, c.tps + c.fps);
  r.recall = ratio(c.tps, c.tps + c.fns);
  r.iou = ratio(c.tps, c.tps + c.fps + c.fns);
  r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

BinaryMask binarize(const ProbabilityMap& prob, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail(ErrorKind::Config, "binarization threshold must lie in (0,1), got " +
                                std::to_string(threshold));
  }
  BinaryMask mask(prob.height(), prob.width());
  for (std::size_t i = 0; i < prob.size(); ++i) mask[i] = prob[i] >= threshold ? 1 : 0;
  return mask;
}

MetricReport average(std::span<const MetricReport> reports) {
  MetricReport mean;
  if (reports.empty()) return mean;
  for (const auto& r : reports) {
    mean.precision += r.precision;
    mean.recall += r.recall;
    mean.f1 += r.f1;
    mean.iou += r.iou;
  }
  const double n = static_cast<double>(reports.size());
  mean.precision /= n;
  mean.recall /= n;
  mean.f1 /= n;
  mean.iou /= n;
  return mean;
}

}  // namespace pixelgame
