#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sz3d/tensor.hpp"

// Numerical kernels for volumetric feature maps.
//
// Spatial tensors are either unbatched [C, D, H, W] or batched [N, C, D, H, W];
// every kernel accepts both and returns the same rank it was given. Loops are
// OpenMP-parallel over (sample, channel) slices. Each output element is owned
// by exactly one thread and accumulated in a fixed order, so results are
// bit-identical regardless of thread count. Serial counterparts live in
// reference_kernels.hpp.

namespace sz3d {

using Triple = std::array<std::size_t, 3>;  // (depth, height, width)

std::string triple_str(const Triple& t);

struct ConvSpec {
  Triple kernel{3, 3, 3};
  Triple stride{1, 1, 1};
  Triple padding{1, 1, 1};

  /// Throws ConfigError unless kernel, stride >= 1.
  void validate() const;
  bool operator==(const ConvSpec&) const = default;
};

/// Max-pooling window. Padded positions never win the max.
struct PoolSpec {
  Triple window{2, 2, 2};
  Triple stride{2, 2, 2};
  Triple padding{0, 0, 0};

  void validate() const;
  bool operator==(const PoolSpec&) const = default;
};

/// floor((in + 2*pad - k) / stride) + 1, or 0 when the window does not fit.
std::size_t output_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad);
Triple output_extents(const Triple& in, const Triple& k, const Triple& stride, const Triple& pad);

/// For each output voxel of a max-pool, the flat index into the input tensor
/// of the winning element.
struct PoolIndexMap {
  Shape input_shape;
  Shape output_shape;
  std::vector<std::size_t> argmax;
};

struct ConvGrads {
  Tensor input;  // empty when the input gradient was not requested
  Tensor kernels;
  Tensor bias;
};

namespace kernels {

/// Cross-correlation (no kernel flip) of zero-padded input with kernels
/// [C_out, C_in, kd, kh, kw], plus per-channel bias.
Tensor conv3d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      const ConvSpec& spec);

ConvGrads conv3d_backward(const Tensor& input, const Tensor& kernels, const ConvSpec& spec,
                          const Tensor& grad_output, bool need_input_grad = true);

/// Ties resolve to the lowest flat input index.
std::pair<Tensor, PoolIndexMap> maxpool3d_forward(const Tensor& input, const PoolSpec& spec);

Tensor maxpool3d_backward(const Tensor& grad_output, const PoolIndexMap& index_map,
                          const Shape& input_shape);

/// [N, F] x [O, F]^T + bias[O] -> [N, O]
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};
DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output);

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

/// Concatenates along the channel axis (axis 0 for rank 4, axis 1 for rank 5).
Tensor concat_channels(std::span<const Tensor> parts);

/// Inverse of concat_channels: splits a tensor into consecutive channel blocks.
std::vector<Tensor> split_channels(const Tensor& whole, std::span<const std::size_t> channels);

}  // namespace kernels
}  // namespace sz3d
