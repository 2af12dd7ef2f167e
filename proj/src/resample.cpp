#include "sz3d/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sz3d/errors.hpp"

namespace sz3d {

namespace {

struct Tap {
  std::size_t lo, hi;
  double w;  // weight of hi
};

std::vector<Tap> axis_taps(std::size_t src, std::size_t dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t t = 0; t < dst; ++t) {
    double s = (static_cast<double>(t) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const std::size_t lo = static_cast<std::size_t>(std::floor(s));
    const std::size_t hi = std::min(lo + 1, src - 1);
    taps[t] = {lo, hi, s - static_cast<double>(lo)};
  }
  return taps;
}

std::string dims_str(const std::array<std::size_t, 3>& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

}  // namespace

Volume downsample(const Volume& volume, const std::array<std::size_t, 3>& target) {
  for (std::size_t a = 0; a < 3; ++a) {
    if (target[a] == 0) throw ConfigError("target extents must be positive, got " + dims_str(target));
    if (target[a] > volume.dims[a])
      throw ConfigError("target extents " + dims_str(target) + " exceed source " +
                        dims_str(volume.dims));
  }
  const auto tx = axis_taps(volume.dims[0], target[0]);
  const auto ty = axis_taps(volume.dims[1], target[1]);
  const auto tz = axis_taps(volume.dims[2], target[2]);

  Volume out;
  out.dims = target;
  out.kind = volume.kind;
  out.voxels.resize(out.size());
  for (std::size_t z = 0; z < target[2]; ++z)
    for (std::size_t y = 0; y < target[1]; ++y)
      for (std::size_t x = 0; x < target[0]; ++x) {
        const Tap& a = tx[x];
        const Tap& b = ty[y];
        const Tap& c = tz[z];
        auto lerp_x = [&](std::size_t yy, std::size_t zz) {
          return (1.0 - a.w) * volume.at(a.lo, yy, zz) + a.w * volume.at(a.hi, yy, zz);
        };
        const double v0 = (1.0 - b.w) * lerp_x(b.lo, c.lo) + b.w * lerp_x(b.hi, c.lo);
        const double v1 = (1.0 - b.w) * lerp_x(b.lo, c.hi) + b.w * lerp_x(b.hi, c.hi);
        out.voxels[x + target[0] * (y + target[1] * z)] =
            std::clamp((1.0 - c.w) * v0 + c.w * v1, 0.0, 1.0);
      }
  return out;
}

Volume downsample_box2(const Volume& volume) {
  Volume out;
  out.kind = volume.kind;
  for (std::size_t a = 0; a < 3; ++a) out.dims[a] = (volume.dims[a] + 1) / 2;
  out.voxels.assign(out.size(), 0.0);
  for (std::size_t z = 0; z < out.dims[2]; ++z)
    for (std::size_t y = 0; y < out.dims[1]; ++y)
      for (std::size_t x = 0; x < out.dims[0]; ++x) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t dz = 0; dz < 2; ++dz)
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t sx = 2 * x + dx, sy = 2 * y + dy, sz = 2 * z + dz;
              if (sx >= volume.dims[0] || sy >= volume.dims[1] || sz >= volume.dims[2]) continue;
              sum += volume.at(sx, sy, sz);
              ++count;
            }
        out.voxels[x + out.dims[0] * (y + out.dims[1] * z)] = sum / static_cast<double>(count);
      }
  return out;
}

Volume resample(const Volume& volume, const std::array<std::size_t, 3>& target,
                ResampleMethod method) {
  if (method == ResampleMethod::Trilinear) return downsample(volume, target);
  Volume out = downsample_box2(volume);
  if (out.dims != target)
    throw ConfigError("box averaging yields " + dims_str(out.dims) + ", not the requested " +
                      dims_str(target));
  return out;
}

}  // namespace sz3d
