#pragma once

#include <cmath>
#include <vector>

#include "drbench/geometry.hpp"
#include "drbench/optimize.hpp"
#include "drbench/reducers/pca.hpp"

namespace drbench {

inline const std::vector<ParamSpec>& sammon_schema() {
  static const std::vector<ParamSpec> schema{
      {"learning_rate", ParamSpec::Kind::real, 1e-12, 1e12, 1.0, {}},
      {"max_iter", ParamSpec::Kind::integer, 1, 1e6, std::int64_t{300}, {}},
      {"jitter", ParamSpec::Kind::real, 0.0, 1.0, 1e-3, {}},
  };
  return schema;
}

/// Sammon stress (1/sum D) * sum_{i<j} (D_ij - d_ij)^2 / D_ij over a fixed
/// high-dimensional distance matrix D with positive off-diagonal entries.
class SammonStress {
 public:
  explicit SammonStress(Matrix target) : target_(std::move(target)) {
    const auto n = target_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (!(target_(i, j) > 0.0)) fail("sammon: input points ", i, " and ", j, " coincide");
        scale_ += target_(i, j);
      }
    }
  }

  double value(const Matrix& y) const {
    const auto n = y.rows();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double D = target_(i, j);
        const double diff = D - (y.row(i) - y.row(j)).norm();
        s += diff * diff / D;
      }
    }
    return s / scale_;
  }

  double value_and_gradient(const Matrix& y, Matrix& grad) const {
    const auto n = y.rows();
    const auto p = y.cols();
    grad.setZero(n, p);
    double s = 0.0;
    std::vector<double> delta(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double d2 = 0.0;
        for (Eigen::Index c = 0; c < p; ++c) {
          delta[static_cast<std::size_t>(c)] = y(i, c) - y(j, c);
          d2 += delta[static_cast<std::size_t>(c)] * delta[static_cast<std::size_t>(c)];
        }
        const double d = std::sqrt(d2);
        const double D = target_(i, j);
        s += (D - d) * (D - d) / D;
        if (d < 1e-300) continue;
        const double coef = -2.0 * (D - d) / (D * d);
        for (Eigen::Index c = 0; c < p; ++c) {
          const double g = coef * delta[static_cast<std::size_t>(c)];
          grad(i, c) += g;
          grad(j, c) -= g;
        }
      }
    }
    grad /= scale_;
    return s / scale_;
  }

 private:
  Matrix target_;
  double scale_ = 0.0;
};

// Nudges exact duplicates apart by ~1e-9 of the data scale so the stress is
// defined. Leaves duplicate-free input untouched.
inline Matrix separate_duplicates(const Matrix& x, std::uint64_t seed) {
  Matrix out = x;
  const double scale = std::max(rms_radius(x), 1.0);
  Rng rng(seed, "sammon-duplicates");
  for (int pass = 0; pass < 8; ++pass) {
    bool clean = true;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < out.rows(); ++j) {
        if ((out.row(i) - out.row(j)).squaredNorm() == 0.0) {
          clean = false;
          for (Eigen::Index c = 0; c < out.cols(); ++c) out(j, c) += 1e-9 * scale * rng.normal();
        }
      }
    }
    if (clean) break;
  }
  return out;
}

inline Embedding sammon(const PointSet& x, const HyperparamAssignment& params, std::uint64_t seed,
                        Eigen::Index p = 2) {
  const auto resolved = resolve_params("sammon", sammon_schema(), params);
  require_finite(x.points, "sammon");
  const Matrix input = separate_duplicates(x.points, seed);
  SammonStress stress(pairwise_distances(input).values);

  DescentOptions opts;
  opts.max_iterations = static_cast<int>(resolved.integer("max_iter"));
  opts.initial_step = resolved.real("learning_rate");
  opts.max_displacement = 0.5;
  const Matrix init = pca_init(input, p, seed, resolved.real("jitter"), 0.0, "sammon-init");
  auto result = descend(stress, init, opts);

  Embedding e;
  e.points = centered(result.x);
  e.trace = std::move(result.trace);
  e.provenance = {"sammon", resolved, seed, result.iterations, result.value, result.converged};
  return e;
}

}  // namespace drbench
