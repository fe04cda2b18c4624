#pragma once

#include <span>

#include "pixelgame/image.hpp"

namespace pixelgame {

/// Table of pixel outcomes. Integer-valued for hard masks, real-valued for the
/// product-form relaxation used during training.
struct ConfusionCounts {
  double tps = 0.0;
  double fps = 0.0;
  double tns = 0.0;
  double fns = 0.0;
  double n = 0.0;

  bool operator==(const ConfusionCounts&) const = default;
};

struct MetricReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
};

inline constexpr double kDefaultThreshold = 0.5;

ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt);
ConfusionCounts soft_confusion_counts(const ProbabilityMap& prob, const BinaryMask& gt);

/// Any 0/0 ratio is reported as 0.
MetricReport metrics(const ConfusionCounts& counts);

/// pixel = 1 iff prob >= threshold; threshold must lie in (0,1).
BinaryMask binarize(const ProbabilityMap& prob, double threshold = kDefaultThreshold);

/// Arithmetic mean of per-image reports.
MetricReport average(std::span<const MetricReport> reports);

}  // namespace pixelgame
