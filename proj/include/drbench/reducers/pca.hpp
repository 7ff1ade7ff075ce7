#pragma once

#include <cmath>

#include <Eigen/Eigenvalues>

#include "drbench/datasets.hpp"
#include "drbench/reducers/embedding.hpp"
#include "drbench/rng.hpp"

namespace drbench {

/// Top-p principal directions of the centered data as columns, ordered by
/// decreasing variance. Each column's largest-magnitude entry is positive.
inline Matrix principal_axes(const Matrix& x, Eigen::Index p) {
  const Matrix xc = centered(x);
  const Eigen::MatrixXd cov = (xc.transpose() * xc) / static_cast<double>(std::max<Eigen::Index>(x.rows() - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const auto d = x.cols();
  Matrix axes(d, p);
  for (Eigen::Index c = 0; c < p; ++c) {
    // Eigen sorts eigenvalues ascending.
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < d; ++r) {
      if (std::abs(v[r]) > std::abs(v[arg])) arg = r;
    }
    if (v[arg] < 0.0) v = -v;
    axes.col(c) = v;
  }
  return axes;
}

inline Matrix pca_project(const Matrix& x, Eigen::Index p) {
  if (p < 1 || p > x.cols()) fail("pca: target dimension must lie in [1, ", x.cols(), "], got ", p);
  return centered(x) * principal_axes(x, p);
}

inline Embedding pca(const PointSet& x, Eigen::Index p) {
  require_finite(x.points, "pca");
  Embedding e;
  e.points = pca_project(x.points, p);
  e.provenance.algorithm = "pca";
  e.provenance.seed = x.seed;
  return e;
}

// Deterministic PCA start plus seeded Gaussian jitter of relative size
// `jitter`, rescaled so the configuration's RMS radius is `radius` (or left
// at the PCA radius when radius <= 0).
inline Matrix pca_init(const Matrix& x, Eigen::Index p, std::uint64_t seed, double jitter, double radius,
                       const char* stream) {
  Matrix y = pca_project(x, p);
  double r = std::sqrt(y.squaredNorm() / static_cast<double>(y.rows()));
  if (!(r > 0.0)) r = 1.0;
  if (radius > 0.0) {
    y *= radius / r;
    r = radius;
  }
  Rng rng(seed, stream);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) += jitter * r * rng.normal();
  }
  return y;
}

}  // namespace drbench
