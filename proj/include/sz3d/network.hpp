#pragma once

#include <cstdint>
#include <vector>

#include "sz3d/layers.hpp"

namespace sz3d {

/// A binary classifier: a body producing one logit per sample followed by a
/// sigmoid. Training talks to the body in logit space so the loss can use the
/// stable log-sum-exp form; inference goes through the sigmoid.
class Network {
 public:
  Network() = default;
  explicit Network(Sequential body);

  /// Caching forward pass; returns logits [N, 1].
  Tensor forward_logits(const Tensor& batch);
  /// Backpropagates d(loss)/d(logits) and fills every Parameter::grad.
  void backward_logits(const Tensor& grad_logits);

  Tensor infer_logits(const Tensor& batch) const;
  /// Probability of class 1 for each sample of the batch.
  std::vector<double> infer_proba(const Tensor& batch) const;

  std::vector<Parameter*> parameters() { return body_.parameters(); }
  std::vector<const Parameter*> parameters() const { return body_.parameters(); }
  std::size_t parameter_count() const;

  /// Top-level layer kinds in execution order, ending with Sigmoid.
  std::vector<LayerKind> layer_kinds() const;
  std::size_t count(LayerKind kind) const;

  Sequential& body() { return body_; }
  const Sequential& body() const { return body_; }

 private:
  Sequential body_;
};

/// He-normal weights (std = sqrt(2 / fan_in)) and zero biases, drawn in
/// parameter-registry order from a single Rng seeded with `seed`.
void init_parameters(Network& network, std::uint64_t seed);

}  // namespace sz3d
