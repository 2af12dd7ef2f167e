#include "sz3d/grid_search.hpp"

#include <algorithm>

#include "sz3d/errors.hpp"
#include "sz3d/folds.hpp"

namespace sz3d {

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

}  // namespace

GridResult grid_search(const Eigen::MatrixXd& features, std::span<const int> labels,
                       KernelKind kernel, std::vector<double> C_grid,
                       std::vector<double> gamma_grid, std::size_t inner_folds,
                       std::uint64_t seed, const SvmOptions& options) {
  if (C_grid.empty()) throw ConfigError("C grid is empty");
  if (kernel == KernelKind::Linear) gamma_grid = {0.0};
  if (gamma_grid.empty()) throw ConfigError("gamma grid is empty");
  std::sort(C_grid.begin(), C_grid.end());
  std::sort(gamma_grid.begin(), gamma_grid.end());

  std::vector<int> binary(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) binary[i] = labels[i] > 0 ? 1 : 0;
  const FoldPlan plan = stratified_kfold(binary, inner_folds, seed);

  // Per-fold data is shared by every grid cell.
  std::vector<Eigen::MatrixXd> train_x, test_x;
  std::vector<std::vector<int>> train_y, test_y;
  for (std::size_t f = 0; f < plan.k; ++f) {
    const auto train = plan.complement(f);
    train_x.push_back(take_rows(features, train));
    test_x.push_back(take_rows(features, plan.folds[f]));
    std::vector<int> ty, sy;
    for (std::size_t i : train) ty.push_back(labels[i]);
    for (std::size_t i : plan.folds[f]) sy.push_back(labels[i]);
    train_y.push_back(std::move(ty));
    test_y.push_back(std::move(sy));
  }

  GridResult result;
  bool have_best = false;
  for (double C : C_grid) {
    for (double gamma : gamma_grid) {
      const SvmKernel k = kernel == KernelKind::Linear ? SvmKernel::linear() : SvmKernel::rbf(gamma);
      double acc_sum = 0.0;
      for (std::size_t f = 0; f < plan.k; ++f) {
        const SvmModel model = svm_fit(train_x[f], train_y[f], k, C, options);
        std::size_t correct = 0;
        for (Eigen::Index r = 0; r < test_x[f].rows(); ++r)
          if (svm_predict(model, test_x[f].row(r).transpose()) == test_y[f][r]) ++correct;
        acc_sum += static_cast<double>(correct) / static_cast<double>(test_x[f].rows());
      }
      const GridCell cell{C, gamma, acc_sum / static_cast<double>(plan.k)};
      result.cells.push_back(cell);
      if (!have_best || cell.mean_accuracy > result.mean_accuracy) {
        result.C = cell.C;
        result.gamma = cell.gamma;
        result.mean_accuracy = cell.mean_accuracy;
        have_best = true;
      }
    }
  }
  return result;
}

}  // namespace sz3d
