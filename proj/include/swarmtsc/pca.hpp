#pragma once

#include <Eigen/Dense>

#include <stdexcept>

#include "swarmtsc/dataset.hpp"

namespace swarmtsc {

struct PcaResult {
  Eigen::VectorXd mean;
  /// All covariance eigenvalues, descending.
  Eigen::VectorXd eigenvalues;
  /// Top-k principal axes as columns; each axis has its largest-magnitude
  /// loading positive.
  Eigen::MatrixXd components;
  /// [samples, k] projections of the centered data.
  Eigen::MatrixXd projected;

  [[nodiscard]] double total_variance() const { return eigenvalues.sum(); }
  [[nodiscard]] double explained_ratio(Eigen::Index i) const { return eigenvalues(i) / total_variance(); }
};

/// [instance * time, feature] view of a tensor, in double precision.
inline Eigen::MatrixXd flatten_samples(const FeatureTensor& x) {
  return Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
             x.data.data(), static_cast<Eigen::Index>(x.instances * x.time), static_cast<Eigen::Index>(x.features))
      .cast<double>();
}

/// PCA via eigendecomposition of the population covariance (divides by the
/// sample count).
inline PcaResult pca_project(const Eigen::MatrixXd& data, Eigen::Index k) {
  if (data.rows() < 2) throw std::invalid_argument("pca needs at least two samples");
  if (k < 1 || k > data.cols()) throw std::invalid_argument("k must be in [1, feature count]");
  PcaResult r;
  r.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - r.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(data.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  r.eigenvalues = solver.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) r.eigenvalues(i) = std::max(0.0, r.eigenvalues(i));

  const double tol = std::max(r.eigenvalues(0), 1e-300) * 1e-10 * static_cast<double>(data.cols());
  Eigen::Index rank = 0;
  while (rank < r.eigenvalues.size() && r.eigenvalues(rank) > tol) ++rank;
  if (k > rank) throw std::invalid_argument("k exceeds the rank of the data");

  r.components = vectors.leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    r.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (r.components(arg, c) < 0) r.components.col(c) *= -1.0;
  }
  r.projected = centered * r.components;
  return r;
}

}  // namespace swarmtsc
