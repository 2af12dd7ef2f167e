#include "sz3d/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sz3d/errors.hpp"

namespace sz3d {

double SvmKernel::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
  if (kind == KernelKind::Linear) return x.dot(z);
  return std::exp(-gamma * (x - z).squaredNorm());
}

namespace {

constexpr double kTau = 1e-12;

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const SvmKernel& kernel) {
  const Eigen::Index n = x.rows();
  if (kernel.kind == KernelKind::Linear) return x * x.transpose();
  Eigen::MatrixXd k(n, n);
  const Eigen::VectorXd norms = x.rowwise().squaredNorm();
  const Eigen::MatrixXd dots = x * x.transpose();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      k(i, j) = std::exp(-kernel.gamma * std::max(0.0, norms(i) + norms(j) - 2.0 * dots(i, j)));
  return k;
}

void check_inputs(const Eigen::MatrixXd& features, std::span<const int> labels, double C,
                  const SvmKernel& kernel) {
  if (features.rows() != static_cast<Eigen::Index>(labels.size()))
    throw ShapeError("SVM got " + std::to_string(features.rows()) + " feature rows but " +
                     std::to_string(labels.size()) + " labels");
  if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("SVM penalty C must be positive");
  if (kernel.kind == KernelKind::Rbf && !(kernel.gamma > 0.0))
    throw ConfigError("RBF gamma must be positive");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) pos = true;
    else if (y == -1) neg = true;
    else throw ConfigError("SVM labels must be -1 or +1, got " + std::to_string(y));
  }
  if (!pos || !neg) throw TrainingError("SVM training data contains a single class", 0);
}

}  // namespace

double svm_dual_objective(const Eigen::MatrixXd& features, std::span<const int> labels,
                          const SvmKernel& kernel, const Eigen::VectorXd& alpha) {
  const Eigen::MatrixXd k = kernel_matrix(features, kernel);
  Eigen::VectorXd ay(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) ay(i) = alpha(i) * labels[i];
  return alpha.sum() - 0.5 * ay.dot(k * ay);
}

SvmModel svm_fit(const Eigen::MatrixXd& features, std::span<const int> labels,
                 const SvmKernel& kernel, double C, const SvmOptions& options) {
  check_inputs(features, labels, C, kernel);
  const Eigen::Index n = features.rows();
  const Eigen::MatrixXd K = kernel_matrix(features, kernel);
  std::vector<double> y(n);
  for (Eigen::Index t = 0; t < n; ++t) y[t] = labels[t];

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q alpha - e

  auto in_up = [&](Eigen::Index t) { return y[t] > 0 ? alpha(t) < C : alpha(t) > 0.0; };
  auto in_low = [&](Eigen::Index t) { return y[t] > 0 ? alpha(t) > 0.0 : alpha(t) < C; };
  auto dual = [&] { return 0.5 * (alpha.sum() - alpha.dot(grad)); };

  SvmModel model;
  model.kernel = kernel;
  model.C = C;
  if (options.record_objective) model.dual_objective_trace.push_back(dual());

  double violation = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  for (;; ++iter) {
    // i: maximal -y G over the up set
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t)
      if (in_up(t) && -y[t] * grad(t) > gmax) {
        gmax = -y[t] * grad(t);
        i = t;
      }
    // j: second-order choice over the low set
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double ygt = y[t] * grad(t);
      gmax2 = std::max(gmax2, ygt);
      const double b = gmax + ygt;
      if (i >= 0 && b > 0.0) {
        double a = K(i, i) + K(t, t) - 2.0 * K(i, t);
        if (a <= 0.0) a = kTau;
        if (-(b * b) / a < best) {
          best = -(b * b) / a;
          j = t;
        }
      }
    }
    violation = gmax + gmax2;
    if (violation < options.tolerance || i < 0 || j < 0) break;
    if (iter >= options.max_iterations)
      throw ConvergenceError("SMO did not converge in " + std::to_string(options.max_iterations) +
                                 " iterations; KKT residual " + std::to_string(violation),
                             violation);

    const double old_i = alpha(i), old_j = alpha(j);
    const double qij = y[i] * y[j] * K(i, j);
    if (y[i] != y[j]) {
      double quad = K(i, i) + K(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = -diff; }
      }
      if (diff > 0.0) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = C - diff; }
      } else {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = C + diff; }
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = sum - C; }
      } else {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = sum; }
      }
      if (sum > C) {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = sum - C; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = sum; }
      }
    }
    alpha(i) = std::clamp(alpha(i), 0.0, C);
    alpha(j) = std::clamp(alpha(j), 0.0, C);

    const double d_i = alpha(i) - old_i, d_j = alpha(j) - old_j;
    for (Eigen::Index t = 0; t < n; ++t)
      grad(t) += y[t] * (y[i] * K(i, t) * d_i + y[j] * K(j, t) * d_j);
    if (options.record_objective) model.dual_objective_trace.push_back(dual());
  }

  // bias: average y*G over free vectors, else midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad(t);
    if (alpha(t) >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha(t) <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      sum_free += yg;
      ++n_free;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  model.bias = -rho;
  model.alpha = alpha;
  model.kkt_residual = std::max(violation, 0.0);
  model.iterations = iter;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha(t) > 0.0) sv.push_back(t);
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), features.cols());
  model.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = features.row(sv[s]);
    model.dual_coef(static_cast<Eigen::Index>(s)) = alpha(sv[s]) * y[sv[s]];
  }
  return model;
}

double svm_decision(const SvmModel& model, const Eigen::VectorXd& feature) {
  if (feature.size() != model.support_vectors.cols())
    throw ShapeError("SVM expects " + std::to_string(model.support_vectors.cols()) +
                     " features, got " + std::to_string(feature.size()));
  double f = model.bias;
  for (Eigen::Index s = 0; s < model.support_vectors.rows(); ++s)
    f += model.dual_coef(s) * model.kernel(model.support_vectors.row(s).transpose(), feature);
  return f;
}

int svm_predict(const SvmModel& model, const Eigen::VectorXd& feature) {
  return svm_decision(model, feature) >= 0.0 ? 1 : -1;
}

}  // namespace sz3d
