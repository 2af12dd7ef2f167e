#pragma once

#include <algorithm>
#include <cstddef>
#include <string>

#include "sz3d/errors.hpp"
#include "sz3d/kernels.hpp"

namespace sz3d::detail {

/// A rank-4 or rank-5 tensor viewed as [batch, channels, D, H, W].
struct BatchGeometry {
  std::size_t rank = 5;
  std::size_t batch = 1;
  std::size_t channels = 1;
  Triple spatial{1, 1, 1};

  std::size_t volume() const { return spatial[0] * spatial[1] * spatial[2]; }
};

inline BatchGeometry batch_geometry(const Shape& s, const char* what) {
  BatchGeometry g;
  g.rank = s.size();
  if (s.size() == 4) {
    g.channels = s[0];
    g.spatial = {s[1], s[2], s[3]};
  } else if (s.size() == 5) {
    g.batch = s[0];
    g.channels = s[1];
    g.spatial = {s[2], s[3], s[4]};
  } else {
    throw ShapeError(std::string(what) + " must be rank 4 [C,D,H,W] or rank 5 [N,C,D,H,W], got " +
                     shape_str(s));
  }
  return g;
}

inline BatchGeometry batch_geometry(const Tensor& t, const char* what) {
  return batch_geometry(t.shape(), what);
}

inline Shape make_spatial_shape(const BatchGeometry& g, std::size_t channels, const Triple& s) {
  if (g.rank == 4) return {channels, s[0], s[1], s[2]};
  return {g.batch, channels, s[0], s[1], s[2]};
}

struct Range {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

/// Output positions o in [0, out) with 0 <= o*stride + k - pad < in.
inline Range valid_range(std::size_t out, std::size_t stride, std::size_t k, std::size_t pad,
                         std::size_t in) {
  const auto off = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(pad);
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const std::ptrdiff_t lo = off >= 0 ? 0 : (-off + s - 1) / s;
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(in) - 1 - off;
  std::ptrdiff_t hi = last < 0 ? 0 : last / s + 1;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out));
  if (hi < lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

/// Input positions covered by the pooling window of output position o, clipped to [0, in).
inline Range window_range(std::size_t o, std::size_t stride, std::size_t pad, std::size_t window,
                          std::size_t in) {
  const auto start = static_cast<std::ptrdiff_t>(o * stride) - static_cast<std::ptrdiff_t>(pad);
  const std::ptrdiff_t end = start + static_cast<std::ptrdiff_t>(window);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(start, 0);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(end, static_cast<std::ptrdiff_t>(in));
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace sz3d::detail
