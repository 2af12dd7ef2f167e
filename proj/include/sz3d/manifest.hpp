#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sz3d/volume.hpp"

namespace sz3d {

struct ManifestRow {
  std::string id;
  std::filesystem::path gm, wm, csf;  // as written; relative paths are relative to the manifest
  int label = 0;
  std::size_t line = 0;  // source line, 0 when built in code
};

/// Parses `id,gm,wm,csf,label` CSV text. Checks ids and labels, not files.
std::vector<ManifestRow> parse_manifest(const std::string& text);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);

/// Loads the three maps for one row. `base` resolves relative paths.
Subject load_subject(const ManifestRow& row, const std::filesystem::path& base);

/// Loads every subject in manifest order.
Dataset load_manifest(const std::filesystem::path& path);

}  // namespace sz3d
