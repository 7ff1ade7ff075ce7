#pragma once

#include <cstdint>
#include <vector>

#include "drbench/common.hpp"
#include "drbench/geometry.hpp"
#include "drbench/rng.hpp"
#include "oracles.hpp"

namespace testutil {

inline drbench::Matrix random_points(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
  drbench::Rng rng(seed, "test-points");
  drbench::Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * rng.normal();
  return m;
}

inline oracle::Points to_points(const drbench::Matrix& m) {
  oracle::Points p(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return p;
}

inline drbench::RankMatrix to_rank_matrix(const oracle::IntGrid& g) {
  drbench::RankMatrix r(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) r(i, j) = static_cast<std::int32_t>(g[i][j]);
  return r;
}

inline oracle::IntGrid to_grid(const drbench::RankMatrix& r) {
  oracle::IntGrid g(r.size(), std::vector<long long>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j) g[i][j] = r(i, j);
  return g;
}

// Points on a line at 0, 1, ..., n-1 (optionally reversed): neighbors are
// fully determined with ties at equal offsets broken by column index.
inline drbench::Matrix line_points(std::size_t n, bool reversed = false) {
  drbench::Matrix m(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) m(static_cast<Eigen::Index>(i), 0) = reversed ? double(n - 1 - i) : double(i);
  return m;
}

}  // namespace testutil
