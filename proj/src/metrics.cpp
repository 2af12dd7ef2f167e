#include "sz3d/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>

#include "sz3d/errors.hpp"

namespace sz3d {

namespace {

void check_labels(std::span<const int> labels, std::size_t n, const char* what) {
  if (labels.size() != n)
    throw ShapeError(std::string(what) + ": " + std::to_string(n) + " values but " +
                     std::to_string(labels.size()) + " labels");
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw MetricError(std::string(what) + ": labels must be 0 or 1");
    pos += static_cast<std::size_t>(y);
  }
  if (pos == 0 || pos == labels.size())
    throw MetricError(std::string(what) + " is undefined when only one class is present");
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_labels(labels, scores.size(), "AUC");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // twice the U statistic, kept integral so the result is exact
  std::uint64_t twice_u = 0, neg_below = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t tie_pos = 0, tie_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1) ++tie_pos;
      else ++tie_neg;
      ++j;
    }
    twice_u += tie_pos * (2 * neg_below + tie_neg);
    neg_below += tie_neg;
    pos += tie_pos;
    neg += tie_neg;
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double roc_auc_trapezoid(std::span<const double> scores, std::span<const int> labels) {
  check_labels(labels, scores.size(), "AUC");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double P = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double N = static_cast<double>(labels.size()) - P;
  double area = 0.0, tpr = 0.0, fpr = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    double tp = 0.0, fp = 0.0;
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? tp : fp) += 1.0;
      ++j;
    }
    const double next_tpr = tpr + tp / P, next_fpr = fpr + fp / N;
    area += (next_fpr - fpr) * (tpr + next_tpr) / 2.0;
    tpr = next_tpr;
    fpr = next_fpr;
    i = j;
  }
  return area;
}

Metrics compute_metrics(std::span<const int> labels, std::span<const int> predicted,
                        std::span<const double> scores) {
  check_labels(labels, predicted.size(), "metrics");
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] == 1, guess = predicted[i] == 1;
    if (truth && guess) ++m.tp;
    else if (truth) ++m.fn;
    else if (guess) ++m.fp;
    else ++m.tn;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
  m.sensitivity = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  m.specificity = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
  m.auc = roc_auc(scores, labels);
  return m;
}

Metrics mean_metrics(std::span<const Metrics> metrics) {
  if (metrics.empty()) throw MetricError("no metrics to average");
  Metrics out;
  for (const Metrics& m : metrics) {
    out.accuracy += m.accuracy;
    out.sensitivity += m.sensitivity;
    out.specificity += m.specificity;
    out.auc += m.auc;
    out.tp += m.tp;
    out.tn += m.tn;
    out.fp += m.fp;
    out.fn += m.fn;
  }
  const double n = static_cast<double>(metrics.size());
  out.accuracy /= n;
  out.sensitivity /= n;
  out.specificity /= n;
  out.auc /= n;
  return out;
}

Metrics pooled_metrics(std::span<const Metrics> metrics) {
  Metrics out = mean_metrics(metrics);
  out.accuracy = static_cast<double>(out.tp + out.tn) / static_cast<double>(out.total());
  out.sensitivity = static_cast<double>(out.tp) / static_cast<double>(out.tp + out.fn);
  out.specificity = static_cast<double>(out.tn) / static_cast<double>(out.tn + out.fp);
  return out;
}

}  // namespace sz3d
