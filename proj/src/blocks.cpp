#include "sz3d/blocks.hpp"

#include "sz3d/errors.hpp"

namespace sz3d {

namespace {

// Spatial tensors inside networks are always batched; the channel axis is 1.
std::size_t channels_of(const Tensor& t) { return t.rank() == 5 ? t.extent(1) : t.extent(0); }

Tensor concat_checked(const std::vector<Tensor>& outputs, std::vector<std::size_t>* channels) {
  const Shape& ref = outputs.front().shape();
  for (std::size_t b = 1; b < outputs.size(); ++b) {
    const Shape& s = outputs[b].shape();
    bool same = s.size() == ref.size();
    for (std::size_t a = 0; same && a < s.size(); ++a)
      if (a != s.size() - 4) same = s[a] == ref[a];
    if (!same)
      throw ShapeError("branch " + std::to_string(b) + " output " + shape_str(s) +
                       " does not match branch 0 output " + shape_str(ref) + " at merge");
  }
  if (channels) {
    channels->clear();
    for (const auto& t : outputs) channels->push_back(channels_of(t));
  }
  return kernels::concat_channels(outputs);
}

Sequential conv_relu_chain(std::initializer_list<std::pair<std::size_t, std::size_t>> convs,
                           std::size_t in_channels) {
  // pairs of (kernel edge, out channels); "same" padding throughout
  Sequential seq;
  std::size_t c = in_channels;
  for (auto [edge, out] : convs) {
    const std::size_t pad = edge / 2;
    seq.push_back(std::make_unique<Conv3D>(
        c, out, ConvSpec{{edge, edge, edge}, {1, 1, 1}, {pad, pad, pad}}));
    seq.push_back(std::make_unique<ReLU>());
    c = out;
  }
  return seq;
}

}  // namespace

// -------------------------------------------------------- InceptionBlock

InceptionBlock::InceptionBlock(std::vector<Sequential> branches) : branches_(std::move(branches)) {
  if (branches_.empty()) throw ConfigError("inception block needs at least one branch");
}

Tensor InceptionBlock::infer(const Tensor& input) const {
  std::vector<Tensor> outs;
  outs.reserve(branches_.size());
  for (const auto& b : branches_) outs.push_back(b.infer(input));
  return concat_checked(outs, nullptr);
}

Tensor InceptionBlock::forward(const Tensor& input) {
  std::vector<Tensor> outs;
  outs.reserve(branches_.size());
  for (auto& b : branches_) outs.push_back(b.forward(input));
  return merge(std::move(outs));
}

Tensor InceptionBlock::merge(std::vector<Tensor> outputs) {
  return concat_checked(outputs, &branch_channels_);
}

Tensor InceptionBlock::backward(const Tensor& grad_output) {
  if (branch_channels_.size() != branches_.size())
    throw StateError("InceptionBlock backward called before forward");
  std::vector<Tensor> parts = kernels::split_channels(grad_output, branch_channels_);
  Tensor grad = branches_[0].backward(parts[0]);
  for (std::size_t b = 1; b < branches_.size(); ++b)
    grad = kernels::add(grad, branches_[b].backward(parts[b]));
  return grad;
}

void InceptionBlock::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& b : branches_) b.collect_parameters(out);
}

void InceptionBlock::collect_parameters(std::vector<const Parameter*>& out) const {
  for (const auto& b : branches_) b.collect_parameters(out);
}

void InceptionBlock::for_each_child(const std::function<void(const Layer&)>& fn) const {
  for (const auto& b : branches_) fn(b);
}

InceptionBlock make_inception_block(std::size_t in_channels, const InceptionWidths& w) {
  std::vector<Sequential> branches;
  branches.push_back(conv_relu_chain({{1, w.branch1}}, in_channels));
  branches.push_back(conv_relu_chain({{1, w.reduce3}, {3, w.branch3}}, in_channels));
  branches.push_back(conv_relu_chain({{1, w.reduce5}, {5, w.branch5}}, in_channels));
  Sequential pool_branch;
  pool_branch.push_back(std::make_unique<MaxPool3D>(PoolSpec{{3, 3, 3}, {1, 1, 1}, {1, 1, 1}}));
  pool_branch.push_back(std::make_unique<Conv3D>(
      in_channels, w.pool_proj, ConvSpec{{1, 1, 1}, {1, 1, 1}, {0, 0, 0}}));
  pool_branch.push_back(std::make_unique<ReLU>());
  branches.push_back(std::move(pool_branch));
  return InceptionBlock(std::move(branches));
}

// -------------------------------------------------- InceptionResnetBlock

InceptionResnetBlock::InceptionResnetBlock(InceptionBlock inception,
                                           std::optional<Conv3D> projection)
    : inception_(std::move(inception)), projection_(std::move(projection)) {}

Tensor InceptionResnetBlock::infer(const Tensor& input) const {
  Tensor main = inception_.infer(input);
  Tensor shortcut = projection_ ? projection_->infer(input) : input;
  if (main.shape() != shortcut.shape())
    throw ShapeError("residual addends differ: inception " + shape_str(main.shape()) +
                     " vs shortcut " + shape_str(shortcut.shape()));
  return kernels::add(main, shortcut);
}

Tensor InceptionResnetBlock::forward(const Tensor& input) {
  Tensor main = inception_.forward(input);
  Tensor shortcut = projection_ ? projection_->forward(input) : input;
  if (main.shape() != shortcut.shape())
    throw ShapeError("residual addends differ: inception " + shape_str(main.shape()) +
                     " vs shortcut " + shape_str(shortcut.shape()));
  return kernels::add(main, shortcut);
}

Tensor InceptionResnetBlock::backward(const Tensor& grad_output) {
  Tensor grad = inception_.backward(grad_output);
  return kernels::add(grad, projection_ ? projection_->backward(grad_output) : grad_output);
}

void InceptionResnetBlock::collect_parameters(std::vector<Parameter*>& out) {
  inception_.collect_parameters(out);
  if (projection_) projection_->collect_parameters(out);
}

void InceptionResnetBlock::collect_parameters(std::vector<const Parameter*>& out) const {
  inception_.collect_parameters(out);
  if (projection_) std::as_const(*projection_).collect_parameters(out);
}

void InceptionResnetBlock::for_each_child(const std::function<void(const Layer&)>& fn) const {
  fn(inception_);
  if (projection_) fn(*projection_);
}

InceptionResnetBlock make_inception_resnet_block(std::size_t in_channels,
                                                 const InceptionWidths& widths) {
  std::optional<Conv3D> projection;
  if (widths.out_channels() != in_channels)
    projection.emplace(in_channels, widths.out_channels(),
                       ConvSpec{{1, 1, 1}, {1, 1, 1}, {0, 0, 0}});
  return InceptionResnetBlock(make_inception_block(in_channels, widths), std::move(projection));
}

// ------------------------------------------------------- ChannelBranches

ChannelBranches::ChannelBranches(std::vector<Sequential> branches, std::size_t channels_per_branch)
    : branches_(std::move(branches)), channels_per_branch_(channels_per_branch) {
  if (branches_.empty() || channels_per_branch_ == 0)
    throw ConfigError("ChannelBranches needs at least one branch and one channel per branch");
}

std::vector<Tensor> ChannelBranches::split_input(const Tensor& input) const {
  if (input.rank() != 5)
    throw ShapeError("multi-branch input must be [N,C,D,H,W], got " + shape_str(input.shape()));
  const std::size_t expected = branches_.size() * channels_per_branch_;
  if (input.extent(1) != expected)
    throw ShapeError("multi-branch network expects " + std::to_string(expected) +
                     " input maps, got " + shape_str(input.shape()));
  std::vector<std::size_t> counts(branches_.size(), channels_per_branch_);
  return kernels::split_channels(input, counts);
}

Tensor ChannelBranches::infer(const Tensor& input) const {
  std::vector<Tensor> parts = split_input(input);
  std::vector<Tensor> outs;
  outs.reserve(branches_.size());
  for (std::size_t b = 0; b < branches_.size(); ++b) outs.push_back(branches_[b].infer(parts[b]));
  return concat_checked(outs, nullptr);
}

Tensor ChannelBranches::forward(const Tensor& input) {
  std::vector<Tensor> parts = split_input(input);
  std::vector<Tensor> outs;
  outs.reserve(branches_.size());
  for (std::size_t b = 0; b < branches_.size(); ++b) outs.push_back(branches_[b].forward(parts[b]));
  return concat_checked(outs, &output_channels_);
}

Tensor ChannelBranches::backward(const Tensor& grad_output) {
  if (output_channels_.size() != branches_.size())
    throw StateError("ChannelBranches backward called before forward");
  std::vector<Tensor> parts = kernels::split_channels(grad_output, output_channels_);
  std::vector<Tensor> grads;
  grads.reserve(branches_.size());
  for (std::size_t b = 0; b < branches_.size(); ++b) grads.push_back(branches_[b].backward(parts[b]));
  if (!requires_input_grad_) return {};
  return kernels::concat_channels(grads);
}

void ChannelBranches::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& b : branches_) b.collect_parameters(out);
}

void ChannelBranches::collect_parameters(std::vector<const Parameter*>& out) const {
  for (const auto& b : branches_) b.collect_parameters(out);
}

void ChannelBranches::set_requires_input_grad(bool required) {
  requires_input_grad_ = required;
  for (auto& b : branches_) b.set_requires_input_grad(required);
}

void ChannelBranches::for_each_child(const std::function<void(const Layer&)>& fn) const {
  for (const auto& b : branches_) fn(b);
}

}  // namespace sz3d
