#include "sz3d/layers.hpp"

#include <cmath>

#include "sz3d/errors.hpp"

namespace sz3d {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv3D: return "Conv3D";
    case LayerKind::MaxPool3D: return "MaxPool3D";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::Sigmoid: return "Sigmoid";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Dense: return "Dense";
    case LayerKind::GlobalAvgPool: return "GlobalAvgPool";
    case LayerKind::ConcatBranches: return "ConcatBranches";
    case LayerKind::ResidualAdd: return "ResidualAdd";
    case LayerKind::ChannelBranches: return "ChannelBranches";
    case LayerKind::Sequential: return "Sequential";
  }
  return "?";
}

std::vector<Parameter*> Layer::parameters() {
  std::vector<Parameter*> out;
  collect_parameters(out);
  return out;
}

std::vector<const Parameter*> Layer::parameters() const {
  std::vector<const Parameter*> out;
  collect_parameters(out);
  return out;
}

std::size_t count_layers(const Layer& root, LayerKind kind) {
  std::size_t n = root.kind() == kind ? 1 : 0;
  root.for_each_child([&](const Layer& child) { n += count_layers(child, kind); });
  return n;
}

namespace {

[[noreturn]] void backward_before_forward(std::string_view layer) {
  throw StateError(std::string(layer) + " backward called before forward");
}

}  // namespace

// ---------------------------------------------------------------- Conv3D

Conv3D::Conv3D(std::size_t in_channels, std::size_t out_channels, ConvSpec spec)
    : spec_(spec) {
  spec_.validate();
  if (in_channels == 0 || out_channels == 0)
    throw ConfigError("Conv3D channel counts must be positive");
  const Shape w{out_channels, in_channels, spec.kernel[0], spec.kernel[1], spec.kernel[2]};
  weight_ = {"weight", Tensor(w), Tensor(w)};
  bias_ = {"bias", Tensor(Shape{out_channels}), Tensor(Shape{out_channels})};
}

Tensor Conv3D::infer(const Tensor& input) const {
  return kernels::conv3d_forward(input, weight_.value, bias_.value, spec_);
}

Tensor Conv3D::forward(const Tensor& input) {
  cached_input_ = input;
  return infer(input);
}

Tensor Conv3D::backward(const Tensor& grad_output) {
  if (!cached_input_) backward_before_forward("Conv3D");
  ConvGrads g = kernels::conv3d_backward(*cached_input_, weight_.value, spec_, grad_output,
                                         requires_input_grad_);
  weight_.grad = std::move(g.kernels);
  bias_.grad = std::move(g.bias);
  return std::move(g.input);
}

void Conv3D::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

void Conv3D::collect_parameters(std::vector<const Parameter*>& out) const {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ------------------------------------------------------------- MaxPool3D

MaxPool3D::MaxPool3D(PoolSpec spec) : spec_(spec) { spec_.validate(); }

Tensor MaxPool3D::infer(const Tensor& input) const {
  return kernels::maxpool3d_forward(input, spec_).first;
}

Tensor MaxPool3D::forward(const Tensor& input) {
  auto [out, map] = kernels::maxpool3d_forward(input, spec_);
  cached_map_ = std::move(map);
  return std::move(out);
}

Tensor MaxPool3D::backward(const Tensor& grad_output) {
  if (!cached_map_) backward_before_forward("MaxPool3D");
  return kernels::maxpool3d_backward(grad_output, *cached_map_, cached_map_->input_shape);
}

// ------------------------------------------------------------------ ReLU

Tensor ReLU::infer(const Tensor& input) const {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

Tensor ReLU::forward(const Tensor& input) {
  cached_input_ = input;
  return infer(input);
}

Tensor ReLU::backward(const Tensor& grad_output) {
  if (!cached_input_) backward_before_forward("ReLU");
  if (grad_output.shape() != cached_input_->shape())
    throw ShapeError("ReLU grad_output " + shape_str(grad_output.shape()) +
                     " does not match input " + shape_str(cached_input_->shape()));
  Tensor grad(grad_output.shape());
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = (*cached_input_)[i] > 0.0 ? grad_output[i] : 0.0;
  return grad;
}

// --------------------------------------------------------------- Sigmoid

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor Sigmoid::infer(const Tensor& input) const {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = sigmoid(input[i]);
  return out;
}

Tensor Sigmoid::forward(const Tensor& input) {
  cached_output_ = infer(input);
  return *cached_output_;
}

Tensor Sigmoid::backward(const Tensor& grad_output) {
  if (!cached_output_) backward_before_forward("Sigmoid");
  if (grad_output.shape() != cached_output_->shape())
    throw ShapeError("Sigmoid grad_output " + shape_str(grad_output.shape()) +
                     " does not match output " + shape_str(cached_output_->shape()));
  Tensor grad(grad_output.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double y = (*cached_output_)[i];
    grad[i] = y * (1.0 - y) * grad_output[i];
  }
  return grad;
}

// --------------------------------------------------------------- Flatten

Tensor Flatten::infer(const Tensor& input) const {
  if (input.rank() < 2) throw ShapeError("Flatten needs a batched input, got " + shape_str(input.shape()));
  return input.reshaped({input.extent(0), input.size() / input.extent(0)});
}

Tensor Flatten::forward(const Tensor& input) {
  cached_shape_ = input.shape();
  return infer(input);
}

Tensor Flatten::backward(const Tensor& grad_output) {
  if (!cached_shape_) backward_before_forward("Flatten");
  return grad_output.reshaped(*cached_shape_);
}

// ----------------------------------------------------------------- Dense

Dense::Dense(std::size_t in_features, std::size_t out_features) {
  if (in_features == 0 || out_features == 0) throw ConfigError("Dense extents must be positive");
  const Shape w{out_features, in_features};
  weight_ = {"weight", Tensor(w), Tensor(w)};
  bias_ = {"bias", Tensor(Shape{out_features}), Tensor(Shape{out_features})};
}

Tensor Dense::infer(const Tensor& input) const {
  return kernels::dense_forward(input, weight_.value, bias_.value);
}

Tensor Dense::forward(const Tensor& input) {
  cached_input_ = input;
  return infer(input);
}

Tensor Dense::backward(const Tensor& grad_output) {
  if (!cached_input_) backward_before_forward("Dense");
  kernels::DenseGrads g = kernels::dense_backward(*cached_input_, weight_.value, grad_output);
  weight_.grad = std::move(g.weights);
  bias_.grad = std::move(g.bias);
  if (!requires_input_grad_) return {};
  return std::move(g.input);
}

void Dense::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

void Dense::collect_parameters(std::vector<const Parameter*>& out) const {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// --------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::infer(const Tensor& input) const {
  if (input.rank() != 5)
    throw ShapeError("GlobalAvgPool expects [N,C,D,H,W], got " + shape_str(input.shape()));
  const std::size_t n = input.extent(0), c = input.extent(1);
  const std::size_t vol = input.size() / (n * c);
  Tensor out(Shape{n, c});
  for (std::size_t s = 0; s < n * c; ++s) {
    double acc = 0.0;
    for (std::size_t v = 0; v < vol; ++v) acc += input[s * vol + v];
    out[s] = acc / static_cast<double>(vol);
  }
  return out;
}

Tensor GlobalAvgPool::forward(const Tensor& input) {
  cached_shape_ = input.shape();
  return infer(input);
}

Tensor GlobalAvgPool::backward(const Tensor& grad_output) {
  if (!cached_shape_) backward_before_forward("GlobalAvgPool");
  const Shape& s = *cached_shape_;
  if (grad_output.shape() != Shape{s[0], s[1]})
    throw ShapeError("GlobalAvgPool grad_output " + shape_str(grad_output.shape()) +
                     " does not match input " + shape_str(s));
  Tensor grad(s);
  const std::size_t vol = grad.size() / (s[0] * s[1]);
  const double inv = 1.0 / static_cast<double>(vol);
  for (std::size_t i = 0; i < s[0] * s[1]; ++i)
    for (std::size_t v = 0; v < vol; ++v) grad[i * vol + v] = grad_output[i] * inv;
  return grad;
}

// ------------------------------------------------------------ Sequential

Sequential::Sequential(std::vector<LayerPtr> layers) : layers_(std::move(layers)) {}

Sequential::Sequential(const Sequential& other) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    layers_ = std::move(copy.layers_);
  }
  return *this;
}

Tensor Sequential::infer(const Tensor& input) const {
  if (layers_.empty()) return input;
  Tensor x = layers_.front()->infer(input);
  for (std::size_t i = 1; i < layers_.size(); ++i) x = layers_[i]->infer(x);
  return x;
}

Tensor Sequential::forward(const Tensor& input) {
  if (layers_.empty()) return input;
  Tensor x = layers_.front()->forward(input);
  for (std::size_t i = 1; i < layers_.size(); ++i) x = layers_[i]->forward(x);
  return x;
}

Tensor Sequential::backward(const Tensor& grad_output) {
  Tensor g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

void Sequential::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l->collect_parameters(out);
}

void Sequential::collect_parameters(std::vector<const Parameter*>& out) const {
  for (const auto& l : layers_) std::as_const(*l).collect_parameters(out);
}

void Sequential::set_requires_input_grad(bool required) {
  if (!layers_.empty()) layers_.front()->set_requires_input_grad(required);
}

void Sequential::for_each_child(const std::function<void(const Layer&)>& fn) const {
  for (const auto& l : layers_) fn(*l);
}

}  // namespace sz3d
