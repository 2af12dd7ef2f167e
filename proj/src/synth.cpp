#include "sz3d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <string>

#include "sz3d/errors.hpp"
#include "sz3d/nifti.hpp"
#include "sz3d/rng.hpp"

namespace sz3d {

namespace {

double min_extent(const std::array<std::size_t, 3>& e) {
  return static_cast<double>(std::min({e[0], e[1], e[2]}));
}

/// Normalised coordinate in [-1, 1] of voxel centre i on an axis of length n.
double norm_coord(std::size_t i, std::size_t n) {
  return (static_cast<double>(i) + 0.5) / static_cast<double>(n) * 2.0 - 1.0;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct TissueFractions {
  double gm, wm, csf;
};

TissueFractions tissue_at(double r) {
  double gm = 0.85 * std::exp(-std::pow((r - 0.65) / 0.18, 2));
  double wm = 0.9 * logistic((0.45 - r) / 0.06);
  const double total = gm + wm;
  if (total > 1.0) {
    gm /= total;
    wm /= total;
  }
  const double csf = std::clamp(1.0 - gm - wm, 0.0, 1.0) * logistic((0.95 - r) / 0.05);
  return {gm, wm, csf};
}

std::string subject_id(const SynthOptions& o, std::size_t index) {
  char buf[64];
  const bool patient = index >= o.n_per_class;
  std::snprintf(buf, sizeof buf, "s%llu_%s_%03zu", static_cast<unsigned long long>(o.seed), patient ? "pat" : "ctl",
                patient ? index - o.n_per_class : index);
  return buf;
}

}  // namespace

void SynthOptions::validate() const {
  if (n_per_class < 1) throw ConfigError("n per class must be at least 1");
  for (std::size_t e : extents)
    if (e == 0) throw ConfigError("extents must be positive");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
  if (sites == 0) throw ConfigError("at least one lesion site is required");
  if (sites_per_subject == 0 || sites_per_subject > sites)
    throw ConfigError("sites per subject must be in [1, " + std::to_string(sites) + "]");
  if (blob_width && !(*blob_width > 0.0)) throw ConfigError("blob width must be positive");
}

std::size_t SynthOptions::resolved_jitter() const {
  return jitter ? *jitter : static_cast<std::size_t>(min_extent(extents) / 4.0);
}

double SynthOptions::resolved_blob_width() const {
  return blob_width ? *blob_width : min_extent(extents) / 10.0;
}

Volume synth_template(const std::array<std::size_t, 3>& extents, MapKind kind) {
  Volume v;
  v.dims = extents;
  v.kind = kind;
  v.voxels.resize(v.size());
  for (std::size_t z = 0; z < extents[2]; ++z)
    for (std::size_t y = 0; y < extents[1]; ++y)
      for (std::size_t x = 0; x < extents[0]; ++x) {
        const double u = norm_coord(x, extents[0]);
        const double w = norm_coord(y, extents[1]);
        const double s = norm_coord(z, extents[2]);
        const TissueFractions t = tissue_at(std::sqrt(u * u + w * w + s * s));
        const double value = kind == MapKind::GM ? t.gm : kind == MapKind::WM ? t.wm : t.csf;
        v.voxels[x + extents[0] * (y + extents[1] * z)] = value;
      }
  return v;
}

std::vector<std::array<double, 3>> synth_sites(const SynthOptions& o) {
  // Directions spread over the sphere (golden-angle spiral), placed on the GM shell.
  std::vector<std::array<double, 3>> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < o.sites; ++i) {
    const double zc = o.sites == 1 ? 0.0 : 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(o.sites);
    const double rad = std::sqrt(1.0 - zc * zc);
    const double phi = golden * static_cast<double>(i) + 0.5;
    const std::array<double, 3> dir{rad * std::cos(phi), rad * std::sin(phi), zc};
    std::array<double, 3> p{};
    for (std::size_t a = 0; a < 3; ++a) {
      const double n = static_cast<double>(o.extents[a]);
      p[a] = (0.65 * dir[a] + 1.0) / 2.0 * n - 0.5;
    }
    out.push_back(p);
  }
  return out;
}

Subject synth_subject(const SynthOptions& o, std::size_t index) {
  o.validate();
  if (index >= 2 * o.n_per_class) throw ConfigError("subject index out of range");
  Rng rng(derive_seed(o.seed, index));
  Subject s;
  s.id = subject_id(o, index);
  s.label = index >= o.n_per_class ? 1 : 0;
  for (std::size_t m = 0; m < 3; ++m) s.maps[m] = synth_template(o.extents, static_cast<MapKind>(m));

  // Site choice and jitter are drawn for every subject so both classes
  // consume the stream identically; only patients apply them.
  std::vector<std::size_t> order(o.sites);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const auto sites = synth_sites(o);
  const auto J = static_cast<std::int64_t>(o.resolved_jitter());
  const double bw = o.resolved_blob_width();
  std::vector<std::array<double, 3>> centres;
  for (std::size_t c = 0; c < o.sites_per_subject; ++c) {
    std::array<double, 3> p = sites[order[c]];
    for (std::size_t a = 0; a < 3; ++a)
      p[a] += static_cast<double>(static_cast<std::int64_t>(rng.below(2 * J + 1)) - J);
    centres.push_back(p);
  }
  if (s.label == 1 && o.delta > 0.0) {
    Volume& gm = s.maps[0];
    for (std::size_t z = 0; z < o.extents[2]; ++z)
      for (std::size_t y = 0; y < o.extents[1]; ++y)
        for (std::size_t x = 0; x < o.extents[0]; ++x) {
          double dip = 0.0;
          for (const auto& p : centres) {
            const double dx = static_cast<double>(x) - p[0];
            const double dy = static_cast<double>(y) - p[1];
            const double dz = static_cast<double>(z) - p[2];
            dip += o.delta * std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * bw * bw));
          }
          gm.voxels[x + o.extents[0] * (y + o.extents[1] * z)] -= dip;
        }
  }
  for (auto& map : s.maps)
    for (double& v : map.voxels) v = std::clamp(v + o.sigma * rng.normal(), 0.0, 1.0);
  return s;
}

std::filesystem::path synth_generate(const SynthOptions& o, const std::filesystem::path& out_dir) {
  o.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  std::vector<ManifestRow> rows;
  static constexpr const char* suffix[3] = {"_gm.nii", "_wm.nii", "_csf.nii"};
  for (std::size_t i = 0; i < 2 * o.n_per_class; ++i) {
    const Subject s = synth_subject(o, i);
    ManifestRow row;
    row.id = s.id;
    row.label = s.label;
    std::filesystem::path* paths[3] = {&row.gm, &row.wm, &row.csf};
    for (std::size_t m = 0; m < 3; ++m) {
      *paths[m] = s.id + suffix[m];
      write_nifti(out_dir / *paths[m], s.maps[m]);
    }
    rows.push_back(std::move(row));
  }
  const auto manifest = out_dir / "manifest.csv";
  write_manifest(manifest, rows);
  return manifest;
}

}  // namespace sz3d
