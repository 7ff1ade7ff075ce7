#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "drbench/common.hpp"

namespace drbench {

/// Dense symmetric Euclidean distance matrix with zero diagonal.
struct DistanceMatrix {
  Matrix values;

  Eigen::Index size() const { return values.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

/// Row-wise neighbor ranks. ranks(i, j) is the position of j in the list of
/// i's neighbors sorted by distance, counting from 1; the diagonal holds 0.
class RankMatrix {
 public:
  RankMatrix() = default;
  explicit RankMatrix(std::size_t n) : n_(n), ranks_(n * n, 0) {}

  std::size_t size() const { return n_; }
  std::int32_t operator()(std::size_t i, std::size_t j) const { return ranks_[i * n_ + j]; }
  std::int32_t& operator()(std::size_t i, std::size_t j) { return ranks_[i * n_ + j]; }

  // Row i as the column index of its r-th nearest neighbor, r = 1..n-1.
  std::vector<std::size_t> neighbors(std::size_t i) const {
    std::vector<std::size_t> out(n_ - 1);
    for (std::size_t j = 0; j < n_; ++j) {
      if (j != i) out[static_cast<std::size_t>(ranks_[i * n_ + j]) - 1] = j;
    }
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::int32_t> ranks_;
};

/// (n-1)x(n-1) joint histogram of high- and low-dimensional ranks.
/// counts(k-1, l-1) is the number of ordered pairs with high rank k and low
/// rank l.
class CoRankingMatrix {
 public:
  CoRankingMatrix() = default;
  explicit CoRankingMatrix(std::size_t n) : n_(n), m_(n - 1), counts_(m_ * m_, 0) {}

  std::size_t points() const { return n_; }
  std::size_t dim() const { return m_; }
  std::int64_t operator()(std::size_t k, std::size_t l) const { return counts_[k * m_ + l]; }
  std::int64_t& operator()(std::size_t k, std::size_t l) { return counts_[k * m_ + l]; }

  std::int64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<std::int64_t> counts_;
};

/// Directed k-nearest-neighbor graph: adjacent(i, j) iff rank of j from i <= k.
class KnnGraph {
 public:
  KnnGraph(std::size_t n, std::size_t k) : n_(n), k_(k), adj_(n * n, 0) {}

  std::size_t size() const { return n_; }
  std::size_t k() const { return k_; }
  bool operator()(std::size_t i, std::size_t j) const { return adj_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j) { adj_[i * n_ + j] = 1; }

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<std::uint8_t> adj_;
};

inline DistanceMatrix pairwise_distances(const Matrix& points) {
  const auto n = points.rows();
  if (n < 2) fail("pairwise_distances: need at least 2 points, got ", n);
  require_finite(points, "pairwise_distances");
  DistanceMatrix d{Matrix::Zero(n, n)};
  const auto dim = points.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < dim; ++c) {
        const double diff = points(i, c) - points(j, c);
        s += diff * diff;
      }
      const double v = std::sqrt(s);
      d.values(i, j) = v;
      d.values(j, i) = v;
    }
  }
  return d;
}

// Ties are broken by ascending column index, so ranks never depend on sort
// implementation details.
inline RankMatrix rank_matrix(const DistanceMatrix& d) {
  const auto n = static_cast<std::size_t>(d.size());
  if (n < 2 || d.values.cols() != d.values.rows()) fail("rank_matrix: invalid distance matrix");
  RankMatrix r(n);
  std::vector<std::size_t> order(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order[w++] = j;
    }
    const double* row = d.values.data() + i * n;
    std::stable_sort(order.begin(), order.end(),
                     [row](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      r(i, order[pos]) = static_cast<std::int32_t>(pos + 1);
    }
  }
  return r;
}

inline CoRankingMatrix coranking_matrix(const RankMatrix& hi, const RankMatrix& lo) {
  if (hi.size() != lo.size()) {
    fail<DimensionMismatch>("coranking_matrix: rank matrices have ", hi.size(), " and ", lo.size(), " points");
  }
  const std::size_t n = hi.size();
  if (n < 2) fail("coranking_matrix: need at least 2 points");
  CoRankingMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      ++m(static_cast<std::size_t>(hi(i, j)) - 1, static_cast<std::size_t>(lo(i, j)) - 1);
    }
  }
  return m;
}

inline KnnGraph knn_graph(const RankMatrix& r, std::size_t k) {
  const std::size_t n = r.size();
  if (k < 1 || k + 1 > n) fail("knn_graph: k must lie in [1, ", n - 1, "], got ", k);
  KnnGraph g(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && static_cast<std::size_t>(r(i, j)) <= k) g.set(i, j);
    }
  }
  return g;
}

/// Distances and ranks of one configuration, computed once and shared by all
/// metrics evaluated on it.
struct Geometry {
  DistanceMatrix distances;
  RankMatrix ranks;

  static Geometry of(const Matrix& points) {
    Geometry g;
    g.distances = pairwise_distances(points);
    g.ranks = rank_matrix(g.distances);
    return g;
  }
};

}  // namespace drbench
