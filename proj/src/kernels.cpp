#include "sz3d/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>

#include "batch_geometry.hpp"
#include "sz3d/errors.hpp"

namespace sz3d {

std::string triple_str(const Triple& t) {
  return std::to_string(t[0]) + "x" + std::to_string(t[1]) + "x" + std::to_string(t[2]);
}

void ConvSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (kernel[a] < 1) throw ConfigError("conv kernel extents must be >= 1, got " + triple_str(kernel));
    if (stride[a] < 1) throw ConfigError("conv strides must be >= 1, got " + triple_str(stride));
  }
}

void PoolSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (window[a] < 1) throw ConfigError("pool window must be >= 1, got " + triple_str(window));
    if (stride[a] < 1) throw ConfigError("pool stride must be >= 1, got " + triple_str(stride));
    if (padding[a] >= window[a])
      throw ConfigError("pool padding must be smaller than the window, got pad " +
                        triple_str(padding) + " window " + triple_str(window));
  }
}

std::size_t output_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  const std::size_t padded = in + 2 * pad;
  if (padded < k || stride == 0) return 0;
  return (padded - k) / stride + 1;
}

Triple output_extents(const Triple& in, const Triple& k, const Triple& stride, const Triple& pad) {
  return {output_extent(in[0], k[0], stride[0], pad[0]),
          output_extent(in[1], k[1], stride[1], pad[1]),
          output_extent(in[2], k[2], stride[2], pad[2])};
}

namespace kernels {

using detail::BatchGeometry;
using detail::batch_geometry;
using detail::make_spatial_shape;
using detail::valid_range;

Tensor conv3d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      const ConvSpec& spec) {
  spec.validate();
  const BatchGeometry g = batch_geometry(input, "conv3d input");
  if (kernels.rank() != 5)
    throw ShapeError("conv3d kernels must be rank 5 [C_out,C_in,kd,kh,kw], got " +
                     shape_str(kernels.shape()));
  if (kernels.extent(1) != g.channels)
    throw ShapeError("conv3d channel mismatch: input " + shape_str(input.shape()) +
                     " vs kernels " + shape_str(kernels.shape()));
  const Triple k{kernels.extent(2), kernels.extent(3), kernels.extent(4)};
  if (k != spec.kernel)
    throw ShapeError("conv3d kernels " + shape_str(kernels.shape()) +
                     " do not match spec kernel " + triple_str(spec.kernel));
  const std::size_t c_out = kernels.extent(0);
  if (bias.rank() != 1 || bias.extent(0) != c_out)
    throw ShapeError("conv3d bias " + shape_str(bias.shape()) + " does not match kernels " +
                     shape_str(kernels.shape()));
  const Triple o = output_extents(g.spatial, spec.kernel, spec.stride, spec.padding);
  if (o[0] == 0 || o[1] == 0 || o[2] == 0)
    throw ShapeError("conv3d padded input " + shape_str(input.shape()) +
                     " smaller than kernel " + triple_str(spec.kernel));

  Tensor out(make_spatial_shape(g, c_out, o));
  const auto N = static_cast<std::ptrdiff_t>(g.batch);
  const auto CO = static_cast<std::ptrdiff_t>(c_out);
  const std::size_t ci_n = g.channels;
  const std::size_t in_vol = g.volume();
  const std::size_t out_vol = o[0] * o[1] * o[2];
  const std::size_t k_vol = k[0] * k[1] * k[2];
  const std::size_t H = g.spatial[1], W = g.spatial[2];
  const double* in_data = input.data().data();
  const double* k_data = kernels.data().data();
  double* out_data = out.data().data();

#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t n = 0; n < N; ++n) {
    for (std::ptrdiff_t co = 0; co < CO; ++co) {
      double* dst = out_data + (static_cast<std::size_t>(n) * c_out + co) * out_vol;
      std::fill(dst, dst + out_vol, bias[co]);
      for (std::size_t ci = 0; ci < ci_n; ++ci) {
        const double* src = in_data + (static_cast<std::size_t>(n) * ci_n + ci) * in_vol;
        const double* kw_base = k_data + (static_cast<std::size_t>(co) * ci_n + ci) * k_vol;
        for (std::size_t kz = 0; kz < k[0]; ++kz) {
          const auto rz = valid_range(o[0], spec.stride[0], kz, spec.padding[0], g.spatial[0]);
          for (std::size_t ky = 0; ky < k[1]; ++ky) {
            const auto ry = valid_range(o[1], spec.stride[1], ky, spec.padding[1], H);
            for (std::size_t kx = 0; kx < k[2]; ++kx) {
              const auto rx = valid_range(o[2], spec.stride[2], kx, spec.padding[2], W);
              const double w = kw_base[(kz * k[1] + ky) * k[2] + kx];
              for (std::size_t oz = rz.lo; oz < rz.hi; ++oz) {
                const std::size_t iz = oz * spec.stride[0] + kz - spec.padding[0];
                for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
                  const std::size_t iy = oy * spec.stride[1] + ky - spec.padding[1];
                  double* orow = dst + (oz * o[1] + oy) * o[2];
                  const double* irow = src + (iz * H + iy) * W;
                  if (spec.stride[2] == 1) {
                    for (std::size_t ox = rx.lo; ox < rx.hi; ++ox)
                      orow[ox] += w * irow[ox + kx - spec.padding[2]];
                  } else {
                    for (std::size_t ox = rx.lo; ox < rx.hi; ++ox)
                      orow[ox] += w * irow[ox * spec.stride[2] + kx - spec.padding[2]];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

ConvGrads conv3d_backward(const Tensor& input, const Tensor& kernels, const ConvSpec& spec,
                          const Tensor& grad_output, bool need_input_grad) {
  spec.validate();
  const BatchGeometry g = batch_geometry(input, "conv3d input");
  if (kernels.rank() != 5 || kernels.extent(1) != g.channels)
    throw ShapeError("conv3d channel mismatch: input " + shape_str(input.shape()) +
                     " vs kernels " + shape_str(kernels.shape()));
  const Triple k{kernels.extent(2), kernels.extent(3), kernels.extent(4)};
  if (k != spec.kernel)
    throw ShapeError("conv3d kernels " + shape_str(kernels.shape()) +
                     " do not match spec kernel " + triple_str(spec.kernel));
  const std::size_t c_out = kernels.extent(0);
  const Triple o = output_extents(g.spatial, spec.kernel, spec.stride, spec.padding);
  const Shape expected = make_spatial_shape(g, c_out, o);
  if (grad_output.shape() != expected)
    throw ShapeError("conv3d grad_output " + shape_str(grad_output.shape()) +
                     " does not match forward output " + shape_str(expected));

  const std::size_t ci_n = g.channels;
  const std::size_t in_vol = g.volume();
  const std::size_t out_vol = o[0] * o[1] * o[2];
  const std::size_t k_vol = k[0] * k[1] * k[2];
  const std::size_t H = g.spatial[1], W = g.spatial[2];
  const double* in_data = input.data().data();
  const double* k_data = kernels.data().data();
  const double* g_data = grad_output.data().data();

  ConvGrads grads;
  grads.kernels = Tensor(kernels.shape());
  grads.bias = Tensor(Shape{c_out});
  double* gk = grads.kernels.data().data();
  double* gb = grads.bias.data().data();

  const auto CO = static_cast<std::ptrdiff_t>(c_out);
  const auto CI = static_cast<std::ptrdiff_t>(ci_n);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co = 0; co < CO; ++co) {
    double acc = 0.0;
    for (std::size_t n = 0; n < g.batch; ++n) {
      const double* src = g_data + (n * c_out + co) * out_vol;
      for (std::size_t v = 0; v < out_vol; ++v) acc += src[v];
    }
    gb[co] = acc;
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t co = 0; co < CO; ++co) {
    for (std::ptrdiff_t ci = 0; ci < CI; ++ci) {
      double* gk_base = gk + (static_cast<std::size_t>(co) * ci_n + ci) * k_vol;
      for (std::size_t kz = 0; kz < k[0]; ++kz) {
        const auto rz = valid_range(o[0], spec.stride[0], kz, spec.padding[0], g.spatial[0]);
        for (std::size_t ky = 0; ky < k[1]; ++ky) {
          const auto ry = valid_range(o[1], spec.stride[1], ky, spec.padding[1], H);
          for (std::size_t kx = 0; kx < k[2]; ++kx) {
            const auto rx = valid_range(o[2], spec.stride[2], kx, spec.padding[2], W);
            double acc = 0.0;
            for (std::size_t n = 0; n < g.batch; ++n) {
              const double* src = in_data + (n * ci_n + ci) * in_vol;
              const double* gsrc = g_data + (n * c_out + co) * out_vol;
              for (std::size_t oz = rz.lo; oz < rz.hi; ++oz) {
                const std::size_t iz = oz * spec.stride[0] + kz - spec.padding[0];
                for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
                  const std::size_t iy = oy * spec.stride[1] + ky - spec.padding[1];
                  const double* grow = gsrc + (oz * o[1] + oy) * o[2];
                  const double* irow = src + (iz * H + iy) * W;
                  for (std::size_t ox = rx.lo; ox < rx.hi; ++ox)
                    acc += grow[ox] * irow[ox * spec.stride[2] + kx - spec.padding[2]];
                }
              }
            }
            gk_base[(kz * k[1] + ky) * k[2] + kx] = acc;
          }
        }
      }
    }
  }

  if (!need_input_grad) return grads;

  grads.input = Tensor(input.shape());
  double* gi = grads.input.data().data();
  const auto N = static_cast<std::ptrdiff_t>(g.batch);

#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t n = 0; n < N; ++n) {
    for (std::ptrdiff_t ci = 0; ci < CI; ++ci) {
      double* dst = gi + (static_cast<std::size_t>(n) * ci_n + ci) * in_vol;
      for (std::size_t co = 0; co < c_out; ++co) {
        const double* gsrc = g_data + (static_cast<std::size_t>(n) * c_out + co) * out_vol;
        const double* kw_base = k_data + (co * ci_n + ci) * k_vol;
        for (std::size_t kz = 0; kz < k[0]; ++kz) {
          const auto rz = valid_range(o[0], spec.stride[0], kz, spec.padding[0], g.spatial[0]);
          for (std::size_t ky = 0; ky < k[1]; ++ky) {
            const auto ry = valid_range(o[1], spec.stride[1], ky, spec.padding[1], H);
            for (std::size_t kx = 0; kx < k[2]; ++kx) {
              const auto rx = valid_range(o[2], spec.stride[2], kx, spec.padding[2], W);
              const double w = kw_base[(kz * k[1] + ky) * k[2] + kx];
              for (std::size_t oz = rz.lo; oz < rz.hi; ++oz) {
                const std::size_t iz = oz * spec.stride[0] + kz - spec.padding[0];
                for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
                  const std::size_t iy = oy * spec.stride[1] + ky - spec.padding[1];
                  const double* grow = gsrc + (oz * o[1] + oy) * o[2];
                  double* irow = dst + (iz * H + iy) * W;
                  if (spec.stride[2] == 1) {
                    for (std::size_t ox = rx.lo; ox < rx.hi; ++ox)
                      irow[ox + kx - spec.padding[2]] += w * grow[ox];
                  } else {
                    for (std::size_t ox = rx.lo; ox < rx.hi; ++ox)
                      irow[ox * spec.stride[2] + kx - spec.padding[2]] += w * grow[ox];
                  }
                }
              }
            }
          }
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
  PoolIndexMap map;
  map.input_shape = input.shape();
  map.output_shape = out.shape();
  map.argmax.assign(out.size(), 0);

  const std::size_t in_vol = g.volume();
  const std::size_t out_vol = o[0] * o[1] * o[2];
  const std::size_t H = g.spatial[1], W = g.spatial[2];
  const double* in_data = input.data().data();
  double* out_data = out.data().data();
  std::size_t* idx_data = map.argmax.data();
  const auto slices = static_cast<std::ptrdiff_t>(g.batch * g.channels);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < slices; ++s) {
    const std::size_t in_base = static_cast<std::size_t>(s) * in_vol;
    const std::size_t out_base = static_cast<std::size_t>(s) * out_vol;
    for (std::size_t oz = 0; oz < o[0]; ++oz) {
      const auto rz = detail::window_range(oz, spec.stride[0], spec.padding[0], spec.window[0], g.spatial[0]);
      for (std::size_t oy = 0; oy < o[1]; ++oy) {
        const auto ry = detail::window_range(oy, spec.stride[1], spec.padding[1], spec.window[1], H);
        for (std::size_t ox = 0; ox < o[2]; ++ox) {
          const auto rx = detail::window_range(ox, spec.stride[2], spec.padding[2], spec.window[2], W);
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = in_base + (rz.lo * H + ry.lo) * W + rx.lo;
          bool found = false;
          for (std::size_t iz = rz.lo; iz < rz.hi; ++iz)
            for (std::size_t iy = ry.lo; iy < ry.hi; ++iy)
              for (std::size_t ix = rx.lo; ix < rx.hi; ++ix) {
                const std::size_t flat = in_base + (iz * H + iy) * W + ix;
                const double v = in_data[flat];
                if (!found || v > best) {
                  best = v;
                  best_idx = flat;
                  found = true;
                }
              }
          const std::size_t oi = out_base + (oz * o[1] + oy) * o[2] + ox;
          out_data[oi] = best;
          idx_data[oi] = best_idx;
        }
      }
    }
  }
  return {std::move(out), std::move(map)};
}

Tensor maxpool3d_backward(const Tensor& grad_output, const PoolIndexMap& index_map,
                          const Shape& input_shape) {
  if (grad_output.shape() != index_map.output_shape)
    throw ShapeError("maxpool3d grad_output " + shape_str(grad_output.shape()) +
                     " does not match forward output " + shape_str(index_map.output_shape));
  if (input_shape != index_map.input_shape)
    throw ShapeError("maxpool3d input shape " + shape_str(input_shape) +
                     " does not match the index map's " + shape_str(index_map.input_shape));
  const BatchGeometry g = batch_geometry(input_shape, "maxpool3d input");
  const std::size_t in_vol = g.volume();
  const std::size_t slices = g.batch * g.channels;
  const std::size_t out_vol = grad_output.size() / slices;

  Tensor grad_input(input_shape);
  double* gi = grad_input.data().data();
  const double* go = grad_output.data().data();
  const std::size_t* idx = index_map.argmax.data();
  const auto S = static_cast<std::ptrdiff_t>(slices);
  bool corrupt = false;

#pragma omp parallel for schedule(static) reduction(|| : corrupt)
  for (std::ptrdiff_t s = 0; s < S; ++s) {
    const std::size_t lo = static_cast<std::size_t>(s) * in_vol;
    const std::size_t hi = lo + in_vol;
    for (std::size_t v = 0; v < out_vol; ++v) {
      const std::size_t oi = static_cast<std::size_t>(s) * out_vol + v;
      const std::size_t target = idx[oi];
      if (target < lo || target >= hi) {
        corrupt = true;
        continue;
      }
      gi[target] += go[oi];
    }
  }
  if (corrupt) throw ConsistencyError("maxpool3d index map points outside its input slice");
  return grad_input;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 2 || weights.rank() != 2 || input.extent(1) != weights.extent(1))
    throw ShapeError("dense shape mismatch: input " + shape_str(input.shape()) + " vs weights " +
                     shape_str(weights.shape()));
  const std::size_t n_batch = input.extent(0), f = input.extent(1), n_out = weights.extent(0);
  if (bias.rank() != 1 || bias.extent(0) != n_out)
    throw ShapeError("dense bias " + shape_str(bias.shape()) + " does not match weights " +
                     shape_str(weights.shape()));
  Tensor out(Shape{n_batch, n_out});
  const double* x = input.data().data();
  const double* w = weights.data().data();
  double* y = out.data().data();
  const auto O = static_cast<std::ptrdiff_t>(n_out);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t oi = 0; oi < O; ++oi) {
    const double* wrow = w + static_cast<std::size_t>(oi) * f;
    for (std::size_t n = 0; n < n_batch; ++n) {
      const double* xrow = x + n * f;
      double acc = 0.0;
      for (std::size_t j = 0; j < f; ++j) acc += wrow[j] * xrow[j];
      y[n * n_out + oi] = acc + bias[oi];
    }
  }
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output) {
  if (input.rank() != 2 || weights.rank() != 2 || input.extent(1) != weights.extent(1))
    throw ShapeError("dense shape mismatch: input " + shape_str(input.shape()) + " vs weights " +
                     shape_str(weights.shape()));
  const std::size_t n_batch = input.extent(0), f = input.extent(1), n_out = weights.extent(0);
  if (grad_output.shape() != Shape{n_batch, n_out})
    throw ShapeError("dense grad_output " + shape_str(grad_output.shape()) +
                     " does not match forward output " + shape_str(Shape{n_batch, n_out}));
  DenseGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor(Shape{n_out})};
  const double* x = input.data().data();
  const double* w = weights.data().data();
  const double* g = grad_output.data().data();
  double* gx = grads.input.data().data();
  double* gw = grads.weights.data().data();
  double* gb = grads.bias.data().data();
  const auto O = static_cast<std::ptrdiff_t>(n_out);
  const auto N = static_cast<std::ptrdiff_t>(n_batch);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t oi = 0; oi < O; ++oi) {
    double* gwrow = gw + static_cast<std::size_t>(oi) * f;
    double bacc = 0.0;
    for (std::size_t n = 0; n < n_batch; ++n) {
      const double gv = g[n * n_out + oi];
      const double* xrow = x + n * f;
      for (std::size_t j = 0; j < f; ++j) gwrow[j] += gv * xrow[j];
      bacc += gv;
    }
    gb[oi] = bacc;
  }

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < N; ++n) {
    double* gxrow = gx + static_cast<std::size_t>(n) * f;
    for (std::size_t oi = 0; oi < n_out; ++oi) {
      const double gv = g[static_cast<std::size_t>(n) * n_out + oi];
      const double* wrow = w + oi * f;
      for (std::size_t j = 0; j < f; ++j) gxrow[j] += gv * wrow[j];
    }
  }
  return grads;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0))
    throw ShapeError("matmul inner extents differ: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  const std::size_t m = a.extent(0), kk = a.extent(1), n = b.extent(1);
  Tensor c(Shape{m, n});
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* cd = c.data().data();
  const auto M = static_cast<std::ptrdiff_t>(m);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < M; ++i) {
    double* crow = cd + static_cast<std::size_t>(i) * n;
    for (std::size_t p = 0; p < kk; ++p) {
      const double av = ad[static_cast<std::size_t>(i) * kk + p];
      const double* brow = bd + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError("add shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_channels needs at least one tensor");
  const Tensor& first = parts.front();
  const BatchGeometry g0 = batch_geometry(first, "concat input");
  std::size_t total = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const BatchGeometry g = batch_geometry(parts[p], "concat input");
    if (parts[p].rank() != first.rank() || g.batch != g0.batch || g.spatial != g0.spatial)
      throw ShapeError("concat_channels part " + std::to_string(p) + " " +
                       shape_str(parts[p].shape()) + " does not match " + shape_str(first.shape()));
    total += g.channels;
  }
  Tensor out(make_spatial_shape(g0, total, g0.spatial));
  const std::size_t vol = g0.volume();
  double* dst = out.data().data();
  for (std::size_t n = 0; n < g0.batch; ++n) {
    std::size_t offset = 0;
    for (const Tensor& part : parts) {
      const std::size_t c = part.size() / (g0.batch * vol);
      const double* src = part.data().data() + n * c * vol;
      std::copy(src, src + c * vol, dst + (n * total + offset) * vol);
      offset += c;
    }
  }
  return out;
}

std::vector<Tensor> split_channels(const Tensor& whole, std::span<const std::size_t> channels) {
  const BatchGeometry g = batch_geometry(whole, "split input");
  std::size_t total = 0;
  for (std::size_t c : channels) total += c;
  if (total != g.channels)
    throw ShapeError("split_channels counts sum to " + std::to_string(total) + " but tensor " +
                     shape_str(whole.shape()) + " has " + std::to_string(g.channels) + " channels");
  const std::size_t vol = g.volume();
  std::vector<Tensor> parts;
  parts.reserve(channels.size());
  std::size_t offset = 0;
  for (std::size_t c : channels) {
    Tensor part(make_spatial_shape(g, c, g.spatial));
    double* dst = part.data().data();
    for (std::size_t n = 0; n < g.batch; ++n) {
      const double* src = whole.data().data() + (n * g.channels + offset) * vol;
      std::copy(src, src + c * vol, dst + n * c * vol);
    }
    parts.push_back(std::move(part));
    offset += c;
  }
  return parts;
}

}  // namespace kernels
}  // namespace sz3d
