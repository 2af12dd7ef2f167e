#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "sz3d/manifest.hpp"
#include "sz3d/volume.hpp"

namespace sz3d {

/// Phantom generator settings. Every subject shares one smooth template
/// (GM shell, WM core, CSF rim). Patients get Gaussian dips of depth delta in
/// GM at `sites_per_subject` of `sites` fixed loci, each shifted by up to
/// `jitter` voxels per axis. Every map then gets N(0, sigma) voxel noise and
/// is clipped to [0,1].
struct SynthOptions {
  std::size_t n_per_class = 20;
  std::array<std::size_t, 3> extents{16, 16, 16};  // x, y, z
  double delta = 0.4;
  double sigma = 0.05;
  std::uint64_t seed = 0;

  std::size_t sites = 4;
  std::size_t sites_per_subject = 1;
  std::optional<std::size_t> jitter;     // default: min extent / 4
  std::optional<double> blob_width;      // Gaussian sd in voxels; default: min extent / 10

  void validate() const;
  std::size_t resolved_jitter() const;
  double resolved_blob_width() const;
};

/// The noise-free template for one map.
Volume synth_template(const std::array<std::size_t, 3>& extents, MapKind kind);

/// Centres of the lesion sites in voxel coordinates (x, y, z).
std::vector<std::array<double, 3>> synth_sites(const SynthOptions& options);

/// Subject `index` of the dataset; indices [0, n) are controls, [n, 2n) patients.
Subject synth_subject(const SynthOptions& options, std::size_t index);

/// Writes <id>_gm.nii, <id>_wm.nii, <id>_csf.nii for every subject plus
/// manifest.csv into `out_dir`. Returns the manifest path.
std::filesystem::path synth_generate(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace sz3d
