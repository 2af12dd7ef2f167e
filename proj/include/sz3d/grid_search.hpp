#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sz3d/svm.hpp"

namespace sz3d {

struct GridCell {
  double C = 0.0;
  double gamma = 0.0;
  double mean_accuracy = 0.0;
};

struct GridResult {
  double C = 0.0;
  double gamma = 0.0;
  double mean_accuracy = 0.0;
  std::vector<GridCell> cells;  // in evaluation order (C ascending, then gamma)
};

/// Exhaustive search over C x gamma scored by mean stratified inner-fold
/// accuracy. Ties go to the smaller C, then the smaller gamma. For the linear
/// kernel gamma is ignored and reported as 0. Labels are -1/+1.
GridResult grid_search(const Eigen::MatrixXd& features, std::span<const int> labels,
                       KernelKind kernel, std::vector<double> C_grid,
                       std::vector<double> gamma_grid, std::size_t inner_folds,
                       std::uint64_t seed, const SvmOptions& options = {});

}  // namespace sz3d
