#pragma once

#include "sz3d/kernels.hpp"

// Serial direct-loop versions of the kernels in kernels.hpp. They share the
// production signatures so tests and the benchmark can swap them in. No
// OpenMP, no range hoisting: each output element is computed by visiting its
// receptive field and skipping padded positions.

namespace sz3d::reference {

Tensor conv3d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      const ConvSpec& spec);

ConvGrads conv3d_backward(const Tensor& input, const Tensor& kernels, const ConvSpec& spec,
                          const Tensor& grad_output, bool need_input_grad = true);

std::pair<Tensor, PoolIndexMap> maxpool3d_forward(const Tensor& input, const PoolSpec& spec);

Tensor maxpool3d_backward(const Tensor& grad_output, const PoolIndexMap& index_map,
                          const Shape& input_shape);

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

kernels::DenseGrads dense_backward(const Tensor& input, const Tensor& weights,
                                   const Tensor& grad_output);

}  // namespace sz3d::reference
