#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "sz3d/layers.hpp"

namespace sz3d {

/// Channel widths of the four-branch 3D inception block:
///   (a) 1x1x1 conv -> branch1
///   (b) 1x1x1 conv -> reduce3, 3x3x3 conv -> branch3
///   (c) 1x1x1 conv -> reduce5, 5x5x5 conv -> branch5
///   (d) 3x3x3 max-pool (stride 1, same) -> 1x1x1 conv -> pool_proj
/// Every conv is followed by ReLU and preserves spatial extents.
struct InceptionWidths {
  std::size_t branch1 = 8;
  std::size_t reduce3 = 8;
  std::size_t branch3 = 16;
  std::size_t reduce5 = 4;
  std::size_t branch5 = 4;
  std::size_t pool_proj = 4;

  std::size_t out_channels() const { return branch1 + branch3 + branch5 + pool_proj; }
  bool operator==(const InceptionWidths&) const = default;
};

/// Parallel branches applied to the same input, merged by channel concatenation.
class InceptionBlock final : public Layer {
 public:
  explicit InceptionBlock(std::vector<Sequential> branches);

  LayerKind kind() const override { return LayerKind::ConcatBranches; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<InceptionBlock>(*this); }
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_parameters(std::vector<const Parameter*>& out) const override;
  void for_each_child(const std::function<void(const Layer&)>& fn) const override;

  std::size_t branch_count() const { return branches_.size(); }
  Sequential& branch(std::size_t i) { return branches_[i]; }

 private:
  Tensor merge(std::vector<Tensor> outputs);

  std::vector<Sequential> branches_;
  std::vector<std::size_t> branch_channels_;
};

InceptionBlock make_inception_block(std::size_t in_channels, const InceptionWidths& widths);

/// inception(x) + project(x). The projection is a 1x1x1 conv when the block
/// changes the channel count and the identity otherwise.
class InceptionResnetBlock final : public Layer {
 public:
  InceptionResnetBlock(InceptionBlock inception, std::optional<Conv3D> projection);

  LayerKind kind() const override { return LayerKind::ResidualAdd; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<InceptionResnetBlock>(*this);
  }
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_parameters(std::vector<const Parameter*>& out) const override;
  void for_each_child(const std::function<void(const Layer&)>& fn) const override;

  InceptionBlock& inception() { return inception_; }
  bool has_projection() const { return projection_.has_value(); }
  Conv3D& projection() { return *projection_; }

 private:
  InceptionBlock inception_;
  std::optional<Conv3D> projection_;
};

InceptionResnetBlock make_inception_resnet_block(std::size_t in_channels,
                                                 const InceptionWidths& widths);

/// Feeds consecutive input-channel groups to independent branches and
/// concatenates their outputs along the channel axis. Used for the
/// one-branch-per-tissue-map input.
class ChannelBranches final : public Layer {
 public:
  ChannelBranches(std::vector<Sequential> branches, std::size_t channels_per_branch);

  LayerKind kind() const override { return LayerKind::ChannelBranches; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ChannelBranches>(*this); }
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_parameters(std::vector<const Parameter*>& out) const override;
  void set_requires_input_grad(bool required) override;
  void for_each_child(const std::function<void(const Layer&)>& fn) const override;

  std::size_t branch_count() const { return branches_.size(); }
  Sequential& branch(std::size_t i) { return branches_[i]; }
  const Sequential& branch(std::size_t i) const { return branches_[i]; }

 private:
  std::vector<Tensor> split_input(const Tensor& input) const;

  std::vector<Sequential> branches_;
  std::size_t channels_per_branch_;
  std::vector<std::size_t> output_channels_;
  bool requires_input_grad_ = true;
};

}  // namespace sz3d
