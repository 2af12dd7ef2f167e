#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sz3d/architectures.hpp"
#include "sz3d/network.hpp"

namespace sz3d {

enum class OptimizerKind { SgdMomentum, Adam };

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 8;
  std::size_t epochs = 50;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double momentum = 0.9;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;  // shuffling order
  bool shuffle = true;
  std::optional<std::filesystem::path> loss_log;  // CSV epoch,mean_loss

  /// Throws ConfigError on non-positive rates, sizes, or out-of-range betas.
  void validate() const;

  std::string to_text() const;
  static TrainConfig parse(std::string_view text);

  bool operator==(const TrainConfig&) const = default;
};

struct Sample {
  Tensor input;  // [C, D, H, W]
  int label = 0;
};

struct TrainedModel {
  Network network;
  std::optional<ArchSpec> arch;
  TrainConfig config;
  double final_loss = 0.0;
  std::vector<double> loss_history;  // mean loss per epoch
};

struct BceResult {
  double loss = 0.0;
  double grad_logit = 0.0;  // p - y
};

/// Binary cross-entropy of sigmoid(logit) against a {0,1} label, evaluated as
/// max(z,0) - z*y + log(1 + exp(-|z|)) so ln 0 is never taken.
BceResult bce_from_logit(double logit, int label);

/// Mean BCE over a batch of logits.
double bce_mean(std::span<const double> logits, std::span<const int> labels);

/// Mini-batch training on mean batch BCE. Deterministic given the network's
/// initial parameters, config.seed and the order of `data`.
TrainedModel fit(Network network, std::span<const Sample> data, const TrainConfig& config);

/// Stacks [C,D,H,W] samples into [N,C,D,H,W].
Tensor stack_inputs(std::span<const Tensor* const> inputs);

double predict_proba(const TrainedModel& model, const Tensor& sample);
std::vector<double> predict_proba_batch(const TrainedModel& model, std::span<const Tensor> samples);
/// proba >= threshold -> 1 (a probability exactly at the threshold is class 1).
int predict(const TrainedModel& model, const Tensor& sample, double threshold = 0.5);

}  // namespace sz3d
