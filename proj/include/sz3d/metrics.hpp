#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sz3d {

/// Patient (label 1) is the positive class.
struct Metrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double auc = 0.0;
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
};

/// Confusion counts and rates from hard predictions; AUC from `scores`
/// (higher means more likely class 1). Throws MetricError unless both
/// classes are present.
Metrics compute_metrics(std::span<const int> labels, std::span<const int> predicted,
                        std::span<const double> scores);

/// Mann-Whitney AUC: fraction of (positive, negative) pairs where the positive
/// scores higher, ties counting one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Area under the empirical ROC curve by the trapezoid rule.
double roc_auc_trapezoid(std::span<const double> scores, std::span<const int> labels);

/// Rates averaged over the inputs; confusion counts summed.
Metrics mean_metrics(std::span<const Metrics> metrics);

/// Rates recomputed from summed confusion counts. `auc` is left at the mean.
Metrics pooled_metrics(std::span<const Metrics> metrics);

}  // namespace sz3d
