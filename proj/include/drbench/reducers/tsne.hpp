#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "drbench/geometry.hpp"
#include "drbench/reducers/pca.hpp"

namespace drbench {

inline const std::vector<ParamSpec>& tsne_schema() {
  static const std::vector<ParamSpec> schema{
      {"perplexity", ParamSpec::Kind::real, 1.0, 1e9, 30.0, {}},
      // 0 selects max(n / (4 * exaggeration), 50).
      {"learning_rate", ParamSpec::Kind::real, 0.0, 1e9, 0.0, {}},
      {"iterations", ParamSpec::Kind::integer, 1, 1e6, std::int64_t{750}, {}},
      {"exaggeration", ParamSpec::Kind::real, 1.0, 1e3, 12.0, {}},
      {"exaggeration_iters", ParamSpec::Kind::integer, 0, 1e6, std::int64_t{250}, {}},
      {"momentum", ParamSpec::Kind::real, 0.0, 1.0, 0.5, {}},
      {"final_momentum", ParamSpec::Kind::real, 0.0, 1.0, 0.8, {}},
      {"momentum_switch", ParamSpec::Kind::integer, 0, 1e6, std::int64_t{250}, {}},
      {"init_scale", ParamSpec::Kind::real, 1e-12, 1e6, 1e-4, {}},
      {"jitter", ParamSpec::Kind::real, 0.0, 1.0, 1e-2, {}},
  };
  return schema;
}

struct BandwidthResult {
  Matrix conditional;          // row i: p_{j|i}
  std::vector<double> beta;    // precision 1/(2 sigma_i^2)
  std::vector<double> entropy; // achieved entropy per row, nats
};

/// Per-point Gaussian precisions found by bisection so each conditional
/// distribution has entropy log(perplexity) to within `tolerance`.
inline BandwidthResult gaussian_conditionals(const DistanceMatrix& d, double perplexity, double tolerance = 1e-5) {
  const auto n = d.size();
  if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n))) {
    fail("tsne: perplexity must lie strictly between 1 and n = ", n, ", got ", format_double(perplexity));
  }
  const double target = std::log(perplexity);
  BandwidthResult out{Matrix::Zero(n, n), std::vector<double>(static_cast<std::size_t>(n)),
                      std::vector<double>(static_cast<std::size_t>(n))};
  std::vector<double> d2(static_cast<std::size_t>(n));
  std::vector<double> p(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      d2[static_cast<std::size_t>(j)] = d(i, j) * d(i, j);
      if (j != i) dmin = std::min(dmin, d2[static_cast<std::size_t>(j)]);
    }
    // Entropy of row i at precision beta; shifting by dmin avoids underflow
    // without changing the normalized distribution.
    auto row_entropy = [&](double beta) {
      double sum = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (j == i) {
          p[u] = 0.0;
          continue;
        }
        const double shifted = d2[u] - dmin;
        p[u] = std::exp(-beta * shifted);
        sum += p[u];
        weighted += shifted * p[u];
      }
      return std::log(sum) + beta * weighted / sum;
    };
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double h = row_entropy(beta);
    bool ok = std::abs(h - target) <= tolerance;
    for (int it = 0; it < 500 && !ok; ++it) {
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      h = row_entropy(beta);
      ok = std::abs(h - target) <= tolerance;
    }
    if (!ok) fail("tsne: bandwidth search did not converge for point ", i);
    double sum = 0.0;
    for (double v : p) sum += v;
    for (Eigen::Index j = 0; j < n; ++j) out.conditional(i, j) = p[static_cast<std::size_t>(j)] / sum;
    out.beta[static_cast<std::size_t>(i)] = beta;
    out.entropy[static_cast<std::size_t>(i)] = h;
  }
  return out;
}

/// Symmetrized joint affinities P = (P_cond + P_cond^T) / (2n).
inline Matrix joint_affinities(const Matrix& conditional) {
  const double n = static_cast<double>(conditional.rows());
  return (conditional + conditional.transpose()) / (2.0 * n);
}

/// KL(P || Q) with Student-t (one degree of freedom) low-dimensional
/// affinities. With exaggeration a the objective is
///   sum aP log(aP / Q) - (a - 1) log Z,
/// whose gradient is the usual 4 sum (aP - Q) w (y_i - y_j); at a = 1 it is
/// plain KL.
class TsneObjective {
 public:
  explicit TsneObjective(Matrix p, double exaggeration = 1.0) : p_(std::move(p)), alpha_(exaggeration) {}

  void set_exaggeration(double a) { alpha_ = a; }

  double value(const Matrix& y) const {
    const auto n = y.rows();
    Matrix w(n, n);
    const double z = kernel(y, w);
    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double pij = alpha_ * p_(i, j);
        if (i == j || pij <= 0.0) continue;
        kl += pij * std::log(pij / (w(i, j) / z));
      }
    }
    return kl - (alpha_ - 1.0) * std::log(z);
  }

  double value_and_gradient(const Matrix& y, Matrix& grad) const {
    const auto n = y.rows();
    const auto dim = y.cols();
    Matrix w(n, n);
    const double z = kernel(y, w);
    grad.setZero(n, dim);
    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double pij = alpha_ * p_(i, j);
        const double qij = w(i, j) / z;
        if (pij > 0.0) kl += 2.0 * pij * std::log(pij / qij);
        const double coef = 4.0 * (pij - qij) * w(i, j);
        for (Eigen::Index c = 0; c < dim; ++c) {
          const double g = coef * (y(i, c) - y(j, c));
          grad(i, c) += g;
          grad(j, c) -= g;
        }
      }
    }
    return kl - (alpha_ - 1.0) * std::log(z);
  }

 private:
  // Fills w with 1/(1 + |y_i - y_j|^2) and returns their off-diagonal sum.
  static double kernel(const Matrix& y, Matrix& w) {
    const auto n = y.rows();
    const auto dim = y.cols();
    double z = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      w(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double d2 = 0.0;
        for (Eigen::Index c = 0; c < dim; ++c) {
          const double diff = y(i, c) - y(j, c);
          d2 += diff * diff;
        }
        const double v = 1.0 / (1.0 + d2);
        w(i, j) = v;
        w(j, i) = v;
        z += 2.0 * v;
      }
    }
    return z;
  }

  Matrix p_;
  double alpha_;
};

/// Exact O(n^2) t-SNE: momentum gradient descent with per-coordinate gains
/// and early exaggeration, started from a PCA layout rescaled to a tiny radius.
inline Embedding tsne_exact(const PointSet& x, const HyperparamAssignment& params, std::uint64_t seed,
                            Eigen::Index p = 2) {
  const auto resolved = resolve_params("tsne", tsne_schema(), params);
  if (x.n() < 4) fail("tsne: need at least 4 points, got ", x.n());
  require_finite(x.points, "tsne");
  const auto n = x.n();
  const auto bw = gaussian_conditionals(pairwise_distances(x.points), resolved.real("perplexity"));
  TsneObjective objective(joint_affinities(bw.conditional));

  const auto iterations = resolved.integer("iterations");
  const double exaggeration = resolved.real("exaggeration");
  double lr = resolved.real("learning_rate");
  if (lr <= 0.0) lr = std::max(static_cast<double>(n) / (4.0 * exaggeration), 50.0);
  const auto exaggeration_iters = resolved.integer("exaggeration_iters");
  const auto momentum_switch = resolved.integer("momentum_switch");

  Matrix y = pca_init(x.points, p, seed, resolved.real("jitter"), resolved.real("init_scale"), "tsne-init");
  Matrix update = Matrix::Zero(n, p);
  Matrix gains = Matrix::Ones(n, p);
  Matrix grad(n, p);
  Embedding e;
  for (std::int64_t it = 0; it < iterations; ++it) {
    objective.set_exaggeration(it < exaggeration_iters ? exaggeration : 1.0);
    objective.value_and_gradient(y, grad);
    const double momentum = it < momentum_switch ? resolved.real("momentum") : resolved.real("final_momentum");
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < p; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
        gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01) : gains(i, c) + 0.2;
        update(i, c) = momentum * update(i, c) - lr * gains(i, c) * grad(i, c);
        y(i, c) += update(i, c);
      }
    }
    y = centered(y);
  }
  objective.set_exaggeration(1.0);
  const double kl = objective.value(y);
  e.points = std::move(y);
  e.provenance = {"tsne", resolved, seed, static_cast<int>(iterations), kl, std::isfinite(kl)};
  e.trace.push_back(kl);
  return e;
}

}  // namespace drbench
