#pragma once

#include <Eigen/Dense>

namespace sz3d {

struct PcaModel {
  Eigen::VectorXd mean;         // length d
  Eigen::MatrixXd components;   // k x d, orthonormal rows, descending eigenvalue
  Eigen::VectorXd eigenvalues;  // every non-trivial eigenvalue, non-increasing
  double total_variance = 0.0;  // trace of the sample covariance
  bool degenerate = false;      // all samples identical; k == 0

  Eigen::Index k() const { return components.rows(); }
  Eigen::Index dims() const { return mean.size(); }

  /// eigenvalue / total_variance for every retained eigenvalue.
  Eigen::VectorXd explained_variance_ratio() const;
};

enum class PcaRoute { Auto, Gram, Covariance };

/// Sample-covariance PCA (divisor n-1) keeping the smallest k whose cumulative
/// explained variance reaches `variance_target`. `Auto` eigendecomposes the
/// n x n Gram matrix when d > n and the d x d covariance otherwise; both
/// routes give the same components.
PcaModel pca_fit(const Eigen::MatrixXd& samples, double variance_target,
                 PcaRoute route = PcaRoute::Auto);

/// (x - mean) * components^T
Eigen::VectorXd pca_transform(const PcaModel& model, const Eigen::VectorXd& sample);
Eigen::MatrixXd pca_transform_rows(const PcaModel& model, const Eigen::MatrixXd& samples);
Eigen::VectorXd pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& reduced);

}  // namespace sz3d
