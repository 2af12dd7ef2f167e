#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sz3d/classifier.hpp"
#include "sz3d/resample.hpp"

namespace sz3d {

/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Settings for `crossval`, from a JSON config file and/or flags.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::string family = "seq1";
  bool multi_channel = false;
  std::optional<std::size_t> repeats;  // default: 10 for CNNs, 1 otherwise
  std::uint64_t seed = 0;
  std::size_t outer_k = 5;
  std::size_t inner_k = 4;

  TrainConfig train;
  std::vector<double> learning_rates;  // more than one: selected by the inner folds
  std::optional<std::vector<std::size_t>> seq_filters;
  std::optional<std::size_t> stem_filters;
  std::optional<std::size_t> dense_units;

  std::vector<double> C_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> gamma_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  double variance_target = 0.95;

  int constant_class = 1;

  std::optional<std::array<std::size_t, 3>> downsample;  // x, y, z
  ResampleMethod resample_method = ResampleMethod::Trilinear;

  /// Throws ConfigError naming the first bad field.
  void validate() const;
  std::size_t resolved_repeats() const;

  /// Input extent (D, H, W) is taken from the data.
  ModelFamily family_for(const Triple& input_extent) const;
};

/// Reads a JSON object; unknown keys are a ConfigError.
RunConfig parse_run_config(const std::string& json_text);

bool is_cnn_family(const std::string& name);

}  // namespace sz3d
