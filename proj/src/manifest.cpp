#include "sz3d/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sz3d/errors.hpp"
#include "sz3d/nifti.hpp"
#include "text_format.hpp"

namespace sz3d {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string row_prefix(std::size_t line) { return "manifest line " + std::to_string(line) + ": "; }

}  // namespace

std::vector<ManifestRow> parse_manifest(const std::string& text) {
  using Code = ManifestError::Code;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<ManifestRow> rows;
  std::set<std::string> seen;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = text::split(line, ',');
    if (!header) {
      const std::vector<std::string> want{"id", "gm", "wm", "csf", "label"};
      bool ok = cells.size() == want.size();
      for (std::size_t i = 0; ok && i < want.size(); ++i) ok = trim(cells[i]) == want[i];
      if (!ok) throw ManifestError(Code::Malformed, lineno, row_prefix(lineno) + "header must be id,gm,wm,csf,label");
      header = true;
      continue;
    }
    if (cells.size() != 5)
      throw ManifestError(Code::Malformed, lineno,
                          row_prefix(lineno) + "expected 5 fields, got " + std::to_string(cells.size()));
    ManifestRow row;
    row.line = lineno;
    row.id = trim(cells[0]);
    if (row.id.empty()) throw ManifestError(Code::Malformed, lineno, row_prefix(lineno) + "empty id");
    row.gm = trim(cells[1]);
    row.wm = trim(cells[2]);
    row.csf = trim(cells[3]);
    const std::string label = trim(cells[4]);
    if (label == "0") row.label = 0;
    else if (label == "1") row.label = 1;
    else throw ManifestError(Code::BadLabel, lineno, row_prefix(lineno) + "label '" + label + "' is not 0 or 1");
    if (!seen.insert(row.id).second)
      throw ManifestError(Code::DuplicateId, lineno, row_prefix(lineno) + "duplicate id '" + row.id + "'");
    rows.push_back(std::move(row));
  }
  if (!header) throw ManifestError(Code::Malformed, 0, "manifest is empty");
  return rows;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "id,gm,wm,csf,label\n";
  for (const auto& r : rows)
    out << r.id << ',' << r.gm.generic_string() << ',' << r.wm.generic_string() << ','
        << r.csf.generic_string() << ',' << r.label << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Subject load_subject(const ManifestRow& row, const std::filesystem::path& base) {
  using Code = ManifestError::Code;
  const std::size_t line = row.line;
  Subject s;
  s.id = row.id;
  s.label = row.label;
  const std::filesystem::path* paths[3] = {&row.gm, &row.wm, &row.csf};
  for (std::size_t m = 0; m < 3; ++m) {
    const auto kind = static_cast<MapKind>(m);
    const std::filesystem::path p = paths[m]->is_absolute() ? *paths[m] : base / *paths[m];
    if (!std::filesystem::exists(p))
      throw ManifestError(Code::MissingFile, line,
                          row_prefix(line) + "subject '" + row.id + "': " +
                              std::string(to_string(kind)) + " file '" + p.string() + "' not found");
    s.maps[m] = read_nifti(p, kind);
  }
  for (std::size_t m = 1; m < 3; ++m)
    if (s.maps[m].dims != s.maps[0].dims)
      throw ManifestError(Code::ShapeMismatch, line,
                          row_prefix(line) + "subject '" + row.id + "': " +
                              std::string(to_string(static_cast<MapKind>(m))) +
                              " extents differ from GM");
  return s;
}

Dataset load_manifest(const std::filesystem::path& path) {
  const auto rows = read_manifest(path);
  const auto base = path.parent_path();
  Dataset out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(load_subject(row, base));
  return out;
}

}  // namespace sz3d
