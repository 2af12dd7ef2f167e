#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sz3d/kernels.hpp"
#include "sz3d/tensor.hpp"

namespace sz3d {

enum class LayerKind {
  Conv3D,
  MaxPool3D,
  ReLU,
  Sigmoid,
  Flatten,
  Dense,
  GlobalAvgPool,
  ConcatBranches,   // inception block: parallel branches on a shared input
  ResidualAdd,      // inception-residual block
  ChannelBranches,  // one branch per input channel group (multi-map input)
  Sequential,
};

std::string_view to_string(LayerKind kind);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// A differentiable stage operating on batched tensors (batch axis first).
///
/// `infer` is the pure evaluation path and never touches layer state, so a
/// trained layer can be shared across threads. `forward` additionally caches
/// whatever `backward` needs; `backward` overwrites each Parameter::grad and
/// returns the gradient with respect to the input.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual Tensor infer(const Tensor& input) const = 0;
  virtual Tensor forward(const Tensor& input) = 0;
  virtual Tensor backward(const Tensor& grad_output) = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  virtual void collect_parameters(std::vector<Parameter*>& /*out*/) {}
  virtual void collect_parameters(std::vector<const Parameter*>& /*out*/) const {}

  /// Layers told that nobody needs their input gradient may skip computing it
  /// and return an empty tensor from backward.
  virtual void set_requires_input_grad(bool /*required*/) {}

  /// Direct children of composite layers, in execution order.
  virtual void for_each_child(const std::function<void(const Layer&)>& /*fn*/) const {}

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

using LayerPtr = std::unique_ptr<Layer>;

/// Number of layers of `kind` in the subtree rooted at `root` (root included).
std::size_t count_layers(const Layer& root, LayerKind kind);

class Conv3D final : public Layer {
 public:
  Conv3D(std::size_t in_channels, std::size_t out_channels, ConvSpec spec);

  LayerKind kind() const override { return LayerKind::Conv3D; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv3D>(*this); }
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_parameters(std::vector<const Parameter*>& out) const override;
  void set_requires_input_grad(bool required) override { requires_input_grad_ = required; }

  std::size_t in_channels() const { return weight_.value.extent(1); }
  std::size_t out_channels() const { return weight_.value.extent(0); }
  const ConvSpec& spec() const { return spec_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  ConvSpec spec_;
  Parameter weight_;
  Parameter bias_;
  std::optional<Tensor> cached_input_;
  bool requires_input_grad_ = true;
};

class MaxPool3D final : public Layer {
 public:
  explicit MaxPool3D(PoolSpec spec);

  LayerKind kind() const override { return LayerKind::MaxPool3D; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool3D>(*this); }

  const PoolSpec& spec() const { return spec_; }

 private:
  PoolSpec spec_;
  std::optional<PoolIndexMap> cached_map_;
};

class ReLU final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::ReLU; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }

 private:
  std::optional<Tensor> cached_input_;
};

/// Logistic function 1/(1+exp(-x)), evaluated without overflow for large |x|.
double sigmoid(double x);

class Sigmoid final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Sigmoid; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Sigmoid>(*this); }

 private:
  std::optional<Tensor> cached_output_;
};

/// [N, ...] -> [N, prod(...)]
class Flatten final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Flatten; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  std::optional<Shape> cached_shape_;
};

/// Fully connected layer, weight [out, in].
class Dense final : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features);

  LayerKind kind() const override { return LayerKind::Dense; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_parameters(std::vector<const Parameter*>& out) const override;
  void set_requires_input_grad(bool required) override { requires_input_grad_ = required; }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
  std::optional<Tensor> cached_input_;
  bool requires_input_grad_ = true;
};

/// [N, C, D, H, W] -> [N, C], spatial mean per channel.
class GlobalAvgPool final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::GlobalAvgPool; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }

 private:
  std::optional<Shape> cached_shape_;
};

class Sequential final : public Layer {
 public:
  Sequential() = default;
  explicit Sequential(std::vector<LayerPtr> layers);
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  LayerKind kind() const override { return LayerKind::Sequential; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Sequential>(*this); }
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_parameters(std::vector<const Parameter*>& out) const override;
  void set_requires_input_grad(bool required) override;
  void for_each_child(const std::function<void(const Layer&)>& fn) const override;

  void push_back(LayerPtr layer) { layers_.push_back(std::move(layer)); }
  std::size_t size() const { return layers_.size(); }
  Layer& operator[](std::size_t i) { return *layers_[i]; }
  const Layer& operator[](std::size_t i) const { return *layers_[i]; }

 private:
  std::vector<LayerPtr> layers_;
};

}  // namespace sz3d
