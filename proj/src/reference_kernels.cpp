#include "sz3d/reference_kernels.hpp"

#include <limits>

#include "batch_geometry.hpp"
#include "sz3d/errors.hpp"

namespace sz3d::reference {

using detail::BatchGeometry;
using detail::batch_geometry;
using detail::make_spatial_shape;

namespace {

// Signed input coordinate for output position o and kernel tap k.
std::ptrdiff_t tap(std::size_t o, std::size_t stride, std::size_t k, std::size_t pad) {
  return static_cast<std::ptrdiff_t>(o * stride + k) - static_cast<std::ptrdiff_t>(pad);
}

bool inside(std::ptrdiff_t i, std::size_t extent) {
  return i >= 0 && i < static_cast<std::ptrdiff_t>(extent);
}

struct ConvSetup {
  BatchGeometry g;
  std::size_t c_out;
  Triple o;
};

ConvSetup check_conv(const Tensor& input, const Tensor& kernels, const ConvSpec& spec) {
  spec.validate();
  ConvSetup s{batch_geometry(input, "conv3d input"), 0, {}};
  if (kernels.rank() != 5 || kernels.extent(1) != s.g.channels)
    throw ShapeError("conv3d channel mismatch: input " + shape_str(input.shape()) +
                     " vs kernels " + shape_str(kernels.shape()));
  if (Triple{kernels.extent(2), kernels.extent(3), kernels.extent(4)} != spec.kernel)
    throw ShapeError("conv3d kernels " + shape_str(kernels.shape()) +
                     " do not match spec kernel " + triple_str(spec.kernel));
  s.c_out = kernels.extent(0);
  s.o = output_extents(s.g.spatial, spec.kernel, spec.stride, spec.padding);
  if (s.o[0] == 0 || s.o[1] == 0 || s.o[2] == 0)
    throw ShapeError("conv3d padded input " + shape_str(input.shape()) +
                     " smaller than kernel " + triple_str(spec.kernel));
  return s;
}

}  // namespace

Tensor conv3d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      const ConvSpec& spec) {
  const ConvSetup s = check_conv(input, kernels, spec);
  if (bias.rank() != 1 || bias.extent(0) != s.c_out)
    throw ShapeError("conv3d bias " + shape_str(bias.shape()) + " does not match kernels " +
                     shape_str(kernels.shape()));
  const auto& g = s.g;
  const auto& k = spec.kernel;
  Tensor out(make_spatial_shape(g, s.c_out, s.o));
  std::size_t oi = 0;
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < s.c_out; ++co)
      for (std::size_t oz = 0; oz < s.o[0]; ++oz)
        for (std::size_t oy = 0; oy < s.o[1]; ++oy)
          for (std::size_t ox = 0; ox < s.o[2]; ++ox) {
            double acc = bias[co];
            for (std::size_t ci = 0; ci < g.channels; ++ci)
              for (std::size_t kz = 0; kz < k[0]; ++kz) {
                const auto iz = tap(oz, spec.stride[0], kz, spec.padding[0]);
                if (!inside(iz, g.spatial[0])) continue;
                for (std::size_t ky = 0; ky < k[1]; ++ky) {
                  const auto iy = tap(oy, spec.stride[1], ky, spec.padding[1]);
                  if (!inside(iy, g.spatial[1])) continue;
                  for (std::size_t kx = 0; kx < k[2]; ++kx) {
                    const auto ix = tap(ox, spec.stride[2], kx, spec.padding[2]);
                    if (!inside(ix, g.spatial[2])) continue;
                    const std::size_t in_idx =
                        (((n * g.channels + ci) * g.spatial[0] + iz) * g.spatial[1] + iy) *
                            g.spatial[2] + ix;
                    const std::size_t k_idx =
                        (((co * g.channels + ci) * k[0] + kz) * k[1] + ky) * k[2] + kx;
                    acc += kernels[k_idx] * input[in_idx];
                  }
                }
              }
            out[oi++] = acc;
          }
  return out;
}

ConvGrads conv3d_backward(const Tensor& input, const Tensor& kernels, const ConvSpec& spec,
                          const Tensor& grad_output, bool need_input_grad) {
  const ConvSetup s = check_conv(input, kernels, spec);
  const auto& g = s.g;
  const auto& k = spec.kernel;
  if (grad_output.shape() != make_spatial_shape(g, s.c_out, s.o))
    throw ShapeError("conv3d grad_output " + shape_str(grad_output.shape()) +
                     " does not match forward output");
  ConvGrads grads;
  grads.kernels = Tensor(kernels.shape());
  grads.bias = Tensor(Shape{s.c_out});
  if (need_input_grad) grads.input = Tensor(input.shape());

  std::size_t oi = 0;
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < s.c_out; ++co)
      for (std::size_t oz = 0; oz < s.o[0]; ++oz)
        for (std::size_t oy = 0; oy < s.o[1]; ++oy)
          for (std::size_t ox = 0; ox < s.o[2]; ++ox) {
            const double go = grad_output[oi++];
            grads.bias[co] += go;
            for (std::size_t ci = 0; ci < g.channels; ++ci)
              for (std::size_t kz = 0; kz < k[0]; ++kz) {
                const auto iz = tap(oz, spec.stride[0], kz, spec.padding[0]);
                if (!inside(iz, g.spatial[0])) continue;
                for (std::size_t ky = 0; ky < k[1]; ++ky) {
                  const auto iy = tap(oy, spec.stride[1], ky, spec.padding[1]);
                  if (!inside(iy, g.spatial[1])) continue;
                  for (std::size_t kx = 0; kx < k[2]; ++kx) {
                    const auto ix = tap(ox, spec.stride[2], kx, spec.padding[2]);
                    if (!inside(ix, g.spatial[2])) continue;
                    const std::size_t in_idx =
                        (((n * g.channels + ci) * g.spatial[0] + iz) * g.spatial[1] + iy) *
                            g.spatial[2] + ix;
                    const std::size_t k_idx =
                        (((co * g.channels + ci) * k[0] + kz) * k[1] + ky) * k[2] + kx;
                    grads.kernels[k_idx] += go * input[in_idx];
                    if (need_input_grad) grads.input[in_idx] += go * kernels[k_idx];
                  }
                }
              }
          }
  return grads;
}

std::pair<Tensor, PoolIndexMap> maxpool3d_forward(const Tensor& input, const PoolSpec& spec) {
  spec.validate();
  const BatchGeometry g = batch_geometry(input, "maxpool3d input");
  for (int a = 0; a < 3; ++a)
    if (g.spatial[a] + 2 * spec.padding[a] < spec.window[a])
      throw ShapeError("maxpool3d window " + triple_str(spec.window) + " larger than input " +
                       shape_str(input.shape()));
  const Triple o = output_extents(g.spatial, spec.window, spec.stride, spec.padding);
  Tensor out(make_spatial_shape(g, g.channels, o));
  PoolIndexMap map{input.shape(), out.shape(), std::vector<std::size_t>(out.size())};

  std::size_t oi = 0;
  for (std::size_t s = 0; s < g.batch * g.channels; ++s)
    for (std::size_t oz = 0; oz < o[0]; ++oz)
      for (std::size_t oy = 0; oy < o[1]; ++oy)
        for (std::size_t ox = 0; ox < o[2]; ++ox) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          bool found = false;
          for (std::size_t wz = 0; wz < spec.window[0]; ++wz) {
            const auto iz = tap(oz, spec.stride[0], wz, spec.padding[0]);
            if (!inside(iz, g.spatial[0])) continue;
            for (std::size_t wy = 0; wy < spec.window[1]; ++wy) {
              const auto iy = tap(oy, spec.stride[1], wy, spec.padding[1]);
              if (!inside(iy, g.spatial[1])) continue;
              for (std::size_t wx = 0; wx < spec.window[2]; ++wx) {
                const auto ix = tap(ox, spec.stride[2], wx, spec.padding[2]);
                if (!inside(ix, g.spatial[2])) continue;
                const std::size_t idx =
                    ((s * g.spatial[0] + iz) * g.spatial[1] + iy) * g.spatial[2] + ix;
                if (!found || input[idx] > best) {
                  best = input[idx];
                  best_idx = idx;
                  found = true;
                }
              }
            }
          }
          out[oi] = best;
          map.argmax[oi] = best_idx;
          ++oi;
        }
  return {std::move(out), std::move(map)};
}

Tensor maxpool3d_backward(const Tensor& grad_output, const PoolIndexMap& index_map,
                          const Shape& input_shape) {
  if (grad_output.shape() != index_map.output_shape || input_shape != index_map.input_shape)
    throw ShapeError("maxpool3d backward shapes do not match the index map");
  Tensor grad_input(input_shape);
  for (std::size_t i = 0; i < grad_output.size(); ++i) {
    const std::size_t target = index_map.argmax[i];
    if (target >= grad_input.size())
      throw ConsistencyError("maxpool3d index map entry out of bounds");
    grad_input[target] += grad_output[i];
  }
  return grad_input;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 2 || weights.rank() != 2 || input.extent(1) != weights.extent(1) ||
      bias.rank() != 1 || bias.extent(0) != weights.extent(0))
    throw ShapeError("dense shape mismatch: input " + shape_str(input.shape()) + " vs weights " +
                     shape_str(weights.shape()));
  const std::size_t nb = input.extent(0), f = input.extent(1), no = weights.extent(0);
  Tensor out(Shape{nb, no});
  for (std::size_t n = 0; n < nb; ++n)
    for (std::size_t o = 0; o < no; ++o) {
      double acc = 0.0;
      for (std::size_t j = 0; j < f; ++j) acc += weights[o * f + j] * input[n * f + j];
      out[n * no + o] = acc + bias[o];
    }
  return out;
}

kernels::DenseGrads dense_backward(const Tensor& input, const Tensor& weights,
                                   const Tensor& grad_output) {
  if (input.rank() != 2 || weights.rank() != 2 || input.extent(1) != weights.extent(1))
    throw ShapeError("dense shape mismatch");
  const std::size_t nb = input.extent(0), f = input.extent(1), no = weights.extent(0);
  if (grad_output.shape() != Shape{nb, no}) throw ShapeError("dense grad_output shape mismatch");
  kernels::DenseGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor(Shape{no})};
  for (std::size_t n = 0; n < nb; ++n)
    for (std::size_t o = 0; o < no; ++o) {
      const double gv = grad_output[n * no + o];
      grads.bias[o] += gv;
      for (std::size_t j = 0; j < f; ++j) {
        grads.weights[o * f + j] += gv * input[n * f + j];
        grads.input[n * f + j] += gv * weights[o * f + j];
      }
    }
  return grads;
}

}  // namespace sz3d::reference
