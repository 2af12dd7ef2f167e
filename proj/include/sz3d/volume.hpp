#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sz3d/kernels.hpp"
#include "sz3d/tensor.hpp"

namespace sz3d {

enum class MapKind { GM = 0, WM = 1, CSF = 2 };
std::string_view to_string(MapKind kind);

/// A tissue probability map. `dims` are the NIfTI dim[1..3] (x, y, z) and
/// voxels are stored in file order (x fastest).
struct Volume {
  std::array<std::size_t, 3> dims{0, 0, 0};
  std::vector<double> voxels;
  MapKind kind = MapKind::GM;
  std::size_t clamped = 0;  // voxels pulled back into [0,1] on load

  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return voxels[x + dims[0] * (y + dims[1] * z)];
  }

  /// Tensor extents (D, H, W) = (z, y, x); the data layout is unchanged.
  Triple tensor_extent() const { return {dims[2], dims[1], dims[0]}; }
  Tensor to_tensor() const;  // [1, D, H, W]
};

struct Subject {
  std::string id;
  std::array<Volume, 3> maps;  // indexed by MapKind
  int label = 0;               // 0 control, 1 patient

  const Volume& map(MapKind k) const { return maps[static_cast<std::size_t>(k)]; }
};

using Dataset = std::vector<Subject>;

enum class InputMode { SingleGM, MultiChannel };

/// [1, D, H, W] (GM only) or [3, D, H, W] (GM, WM, CSF).
Tensor subject_tensor(const Subject& subject, InputMode mode);

}  // namespace sz3d
