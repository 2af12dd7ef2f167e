#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sz3d/volume.hpp"

namespace sz3d {

enum class NiftiDatatype : std::int16_t { Int16 = 4, Float32 = 16, Float64 = 64 };

struct NiftiWriteOptions {
  NiftiDatatype datatype = NiftiDatatype::Float32;
  // Used for Int16 only: stored = round((value - inter) / slope).
  double scl_slope = 1.0 / 32767.0;
  double scl_inter = 0.0;
  std::array<double, 3> pixdim{1.0, 1.0, 1.0};
};

/// Values more than this far outside [0,1] are rejected on read.
inline constexpr double kClampTolerance = 1e-3;

std::vector<std::uint8_t> encode_nifti(const Volume& volume, const NiftiWriteOptions& opts = {});
Volume decode_nifti(const std::vector<std::uint8_t>& bytes, MapKind kind = MapKind::GM);

void write_nifti(const std::filesystem::path& path, const Volume& volume,
                 const NiftiWriteOptions& opts = {});
Volume read_nifti(const std::filesystem::path& path, MapKind kind = MapKind::GM);

}  // namespace sz3d
