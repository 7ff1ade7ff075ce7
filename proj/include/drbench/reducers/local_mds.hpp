#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "drbench/geometry.hpp"
#include "drbench/optimize.hpp"
#include "drbench/reducers/pca.hpp"

namespace drbench {

inline const std::vector<ParamSpec>& local_mds_schema() {
  static const std::vector<ParamSpec> schema{
      {"k", ParamSpec::Kind::integer, 1, 1e9, std::int64_t{10}, {}},
      {"tau", ParamSpec::Kind::real, 0.0, 1e6, 1.0, {}},
      {"iterations", ParamSpec::Kind::integer, 1, 1e6, std::int64_t{300}, {}},
      {"learning_rate", ParamSpec::Kind::real, 1e-12, 1e12, 1.0, {}},
      {"jitter", ParamSpec::Kind::real, 0.0, 1.0, 1e-3, {}},
  };
  return schema;
}

/// Local MDS stress:
///   sum_{(i,j) in N} (D_ij - d_ij)^2  -  t * sum_{(i,j) not in N} d_ij
/// over unordered pairs, where N is the symmetrized k-NN graph of the input
/// and t = tau * |N| / |N^c| * median_{N}(D). Attraction keeps local
/// distances; the linear repulsion spreads non-neighbors apart.
class LocalMdsStress {
 public:
  LocalMdsStress(const DistanceMatrix& d, const RankMatrix& ranks, std::size_t k, double tau)
      : target_(d.values), neighbor_(static_cast<std::size_t>(d.size() * d.size()), 0) {
    const auto n = static_cast<std::size_t>(d.size());
    if (k < 1 || k + 1 > n) fail("lmds: k must lie in [1, ", n - 1, "], got ", k);
    std::vector<double> local;
    std::size_t far = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool in = static_cast<std::size_t>(ranks(i, j)) <= k || static_cast<std::size_t>(ranks(j, i)) <= k;
        neighbor_[i * n + j] = neighbor_[j * n + i] = in ? 1 : 0;
        if (in) local.push_back(target_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        else ++far;
      }
    }
    if (far > 0 && !local.empty()) {
      auto mid = local.begin() + static_cast<std::ptrdiff_t>(local.size() / 2);
      std::nth_element(local.begin(), mid, local.end());
      double median = *mid;
      if (local.size() % 2 == 0) median = 0.5 * (median + *std::max_element(local.begin(), mid));
      repulsion_ = tau * static_cast<double>(local.size()) / static_cast<double>(far) * median;
    }
  }

  double repulsion() const { return repulsion_; }

  double value(const Matrix& y) const {
    return evaluate(y, nullptr);
  }

  double value_and_gradient(const Matrix& y, Matrix& grad) const {
    grad.setZero(y.rows(), y.cols());
    return evaluate(y, &grad);
  }

 private:
  double evaluate(const Matrix& y, Matrix* grad) const {
    const auto n = y.rows();
    const auto p = y.cols();
    const auto nu = static_cast<std::size_t>(n);
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double d2 = 0.0;
        for (Eigen::Index c = 0; c < p; ++c) {
          const double diff = y(i, c) - y(j, c);
          d2 += diff * diff;
        }
        const double d = std::sqrt(d2);
        double coef;
        if (neighbor_[static_cast<std::size_t>(i) * nu + static_cast<std::size_t>(j)]) {
          const double r = target_(i, j) - d;
          s += r * r;
          coef = -2.0 * r;
        } else {
          s -= repulsion_ * d;
          coef = -repulsion_;
        }
        if (grad && d > 1e-300) {
          coef /= d;
          for (Eigen::Index c = 0; c < p; ++c) {
            const double g = coef * (y(i, c) - y(j, c));
            (*grad)(i, c) += g;
            (*grad)(j, c) -= g;
          }
        }
      }
    }
    return s;
  }

  Matrix target_;
  std::vector<std::uint8_t> neighbor_;
  double repulsion_ = 0.0;
};

inline Embedding local_mds(const PointSet& x, const HyperparamAssignment& params, std::uint64_t seed,
                           Eigen::Index p = 2) {
  const auto resolved = resolve_params("lmds", local_mds_schema(), params);
  require_finite(x.points, "lmds");
  const auto geo = Geometry::of(x.points);
  LocalMdsStress stress(geo.distances, geo.ranks, static_cast<std::size_t>(resolved.integer("k")),
                        resolved.real("tau"));
  DescentOptions opts;
  opts.max_iterations = static_cast<int>(resolved.integer("iterations"));
  opts.initial_step = resolved.real("learning_rate");
  opts.max_displacement = 0.1;
  const Matrix init = pca_init(x.points, p, seed, resolved.real("jitter"), 0.0, "lmds-init");
  auto result = descend(stress, init, opts);

  Embedding e;
  e.points = centered(result.x);
  e.trace = std::move(result.trace);
  e.provenance = {"lmds", resolved, seed, result.iterations, result.value, result.converged};
  return e;
}

}  // namespace drbench
