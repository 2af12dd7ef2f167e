#include "sz3d/pca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sz3d/errors.hpp"

namespace sz3d {

namespace {

// Eigenvalues below this fraction of the largest are treated as zero.
constexpr double kRelativeRankTol = 1e-10;

// Flip each row so its largest-magnitude entry is positive; both routes then
// agree on signs.
void canonical_signs(Eigen::MatrixXd& rows) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    Eigen::Index arg = 0;
    rows.row(r).cwiseAbs().maxCoeff(&arg);
    if (rows(r, arg) < 0.0) rows.row(r) *= -1.0;
  }
}

// Modified Gram-Schmidt over rows, in order.
void orthonormalize_rows(Eigen::MatrixXd& rows) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index q = 0; q < r; ++q) rows.row(r) -= rows.row(r).dot(rows.row(q)) * rows.row(q);
    rows.row(r).normalize();
  }
}

struct Eigenpairs {
  Eigen::VectorXd values;   // descending, non-trivial only
  Eigen::MatrixXd vectors;  // columns, matching values
};

Eigenpairs descending_nontrivial(const Eigen::MatrixXd& sym, Eigen::Index max_rank) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");
  const Eigen::VectorXd& vals = solver.eigenvalues();  // ascending
  const Eigen::Index n = vals.size();
  const double top = vals(n - 1);
  Eigen::Index keep = 0;
  while (keep < n && keep < max_rank && vals(n - 1 - keep) > kRelativeRankTol * top) ++keep;
  Eigenpairs out{Eigen::VectorXd(keep), Eigen::MatrixXd(sym.rows(), keep)};
  for (Eigen::Index i = 0; i < keep; ++i) {
    out.values(i) = vals(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

}  // namespace

Eigen::VectorXd PcaModel::explained_variance_ratio() const {
  if (total_variance <= 0.0) return Eigen::VectorXd();
  return eigenvalues / total_variance;
}

PcaModel pca_fit(const Eigen::MatrixXd& samples, double variance_target, PcaRoute route) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) throw ConfigError("PCA needs at least 2 samples, got " + std::to_string(n));
  if (d < 1) throw ConfigError("PCA needs at least one feature");
  if (!(variance_target > 0.0 && variance_target <= 1.0))
    throw ConfigError("variance_target must be in (0,1]");

  PcaModel model;
  model.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - model.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  model.total_variance = centered.squaredNorm() / denom;
  if (!(model.total_variance > 0.0)) {
    model.degenerate = true;
    model.components.resize(0, d);
    model.eigenvalues.resize(0);
    return model;
  }

  const Eigen::Index max_rank = std::min(n - 1, d);
  const bool use_gram = route == PcaRoute::Gram || (route == PcaRoute::Auto && d > n);
  Eigen::MatrixXd all_components;
  if (use_gram) {
    const Eigen::MatrixXd gram = centered * centered.transpose() / denom;
    const Eigenpairs ep = descending_nontrivial(gram, max_rank);
    model.eigenvalues = ep.values;
    all_components.resize(ep.values.size(), d);
    for (Eigen::Index i = 0; i < ep.values.size(); ++i) {
      const double norm = std::sqrt(denom * ep.values(i));
      all_components.row(i) = (centered.transpose() * ep.vectors.col(i)).transpose() / norm;
    }
    orthonormalize_rows(all_components);
  } else {
    const Eigen::MatrixXd cov = centered.transpose() * centered / denom;
    const Eigenpairs ep = descending_nontrivial(cov, max_rank);
    model.eigenvalues = ep.values;
    all_components = ep.vectors.transpose();
  }
  canonical_signs(all_components);

  Eigen::Index k = model.eigenvalues.size();
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) {
    cumulative += model.eigenvalues(i);
    if (cumulative >= variance_target * model.total_variance * (1.0 - 1e-12)) {
      k = i + 1;
      break;
    }
  }
  model.components = all_components.topRows(k);
  return model;
}

Eigen::VectorXd pca_transform(const PcaModel& model, const Eigen::VectorXd& sample) {
  if (sample.size() != model.dims())
    throw ShapeError("PCA expects " + std::to_string(model.dims()) + " features, got " +
                     std::to_string(sample.size()));
  return model.components * (sample - model.mean);
}

Eigen::MatrixXd pca_transform_rows(const PcaModel& model, const Eigen::MatrixXd& samples) {
  if (samples.cols() != model.dims())
    throw ShapeError("PCA expects " + std::to_string(model.dims()) + " features, got " +
                     std::to_string(samples.cols()));
  return (samples.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Eigen::VectorXd pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& reduced) {
  if (reduced.size() != model.k())
    throw ShapeError("PCA reconstruct expects " + std::to_string(model.k()) + " coefficients");
  return model.mean + model.components.transpose() * reduced;
}

}  // namespace sz3d
