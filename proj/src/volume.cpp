#include "sz3d/volume.hpp"

#include <algorithm>

#include "sz3d/errors.hpp"

namespace sz3d {

std::string_view to_string(MapKind kind) {
  switch (kind) {
    case MapKind::GM: return "GM";
    case MapKind::WM: return "WM";
    case MapKind::CSF: return "CSF";
  }
  return "?";
}

Tensor Volume::to_tensor() const {
  const Triple e = tensor_extent();
  return Tensor(Shape{1, e[0], e[1], e[2]}, voxels);
}

Tensor subject_tensor(const Subject& subject, InputMode mode) {
  const Volume& gm = subject.map(MapKind::GM);
  const Triple e = gm.tensor_extent();
  if (mode == InputMode::SingleGM) return gm.to_tensor();
  Tensor out(Shape{3, e[0], e[1], e[2]});
  const std::size_t n = gm.size();
  for (std::size_t c = 0; c < 3; ++c) {
    const Volume& v = subject.maps[c];
    if (v.dims != gm.dims)
      throw ShapeError("subject '" + subject.id + "': " + std::string(to_string(v.kind)) +
                       " extents differ from GM");
    std::copy(v.voxels.begin(), v.voxels.end(), out.data().begin() + c * n);
  }
  return out;
}

}  // namespace sz3d
