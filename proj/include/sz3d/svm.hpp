#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sz3d {

enum class KernelKind { Linear, Rbf };

struct SvmKernel {
  KernelKind kind = KernelKind::Linear;
  double gamma = 0.0;  // RBF: exp(-gamma * |x - z|^2)

  static SvmKernel linear() { return {KernelKind::Linear, 0.0}; }
  static SvmKernel rbf(double gamma) { return {KernelKind::Rbf, gamma}; }

  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const;
  bool operator==(const SvmKernel&) const = default;
};

/// Decision f(x) = sum_i coef_i K(sv_i, x) + bias, where coef_i = alpha_i y_i.
struct SvmModel {
  SvmKernel kernel;
  double C = 1.0;
  Eigen::MatrixXd support_vectors;  // one per row
  Eigen::VectorXd dual_coef;        // alpha_i * y_i, one per support vector
  double bias = 0.0;

  // Diagnostics from the solver; not needed for prediction.
  Eigen::VectorXd alpha;  // every training point, 0 <= alpha <= C
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  std::vector<double> dual_objective_trace;  // only when requested
};

struct SvmOptions {
  double tolerance = 1e-3;  // stop when the maximal KKT violation drops below this
  std::size_t max_iterations = 1'000'000;
  bool record_objective = false;
};

/// Soft-margin SVM dual solved by SMO: maximal-violating-pair working set
/// with second-order selection of the second index, analytic two-variable
/// update. Labels must be -1 or +1 and both classes must be present.
SvmModel svm_fit(const Eigen::MatrixXd& features, std::span<const int> labels,
                 const SvmKernel& kernel, double C, const SvmOptions& options = {});

double svm_decision(const SvmModel& model, const Eigen::VectorXd& feature);
/// sign of the decision; a decision of exactly 0 maps to +1.
int svm_predict(const SvmModel& model, const Eigen::VectorXd& feature);

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
double svm_dual_objective(const Eigen::MatrixXd& features, std::span<const int> labels,
                          const SvmKernel& kernel, const Eigen::VectorXd& alpha);

}  // namespace sz3d
