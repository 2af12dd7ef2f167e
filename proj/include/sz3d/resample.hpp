#pragma once

#include <array>
#include <cstddef>

#include "sz3d/volume.hpp"

namespace sz3d {

enum class ResampleMethod { Trilinear, Box2 };

/// Trilinear resampling onto a (nx, ny, nz) grid. Target voxel centre t maps
/// to source coordinate (t + 0.5) * S / T - 0.5 on each axis, so every output
/// is a convex combination of input voxels.
Volume downsample(const Volume& volume, const std::array<std::size_t, 3>& target);

/// Averages 2x2x2 blocks; output extents are ceil(S / 2) and edge blocks
/// average only the voxels that exist.
Volume downsample_box2(const Volume& volume);

Volume resample(const Volume& volume, const std::array<std::size_t, 3>& target,
                ResampleMethod method);

}  // namespace sz3d
