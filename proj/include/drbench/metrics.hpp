#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "drbench/common.hpp"
#include "drbench/geometry.hpp"

namespace drbench {

enum class Orientation { maximize, minimize };

inline const char* to_string(Orientation o) { return o == Orientation::maximize ? "maximize" : "minimize"; }

// True when a is strictly better than b under o.
inline bool better(Orientation o, double a, double b) { return o == Orientation::maximize ? a > b : a < b; }

// Sentinel assigned to failed runs so they lose every comparison.
inline double worst_value(Orientation o) {
  return o == Orientation::maximize ? std::numeric_limits<double>::lowest() : std::numeric_limits<double>::max();
}

enum class MetricId {
  kmax,
  qnx,
  lcmc,
  entropy,
  mutual_info,
  local_error,
  spectral_overlap,
  spectral_overlap_simple,
  spearman,
  procrustes,
  one_nn,
};

struct MetricInfo {
  MetricId id;
  const char* key;      // CLI / file identifier
  const char* display;  // table column title
  Orientation orientation;
};

inline const std::vector<MetricInfo>& metric_catalog() {
  static const std::vector<MetricInfo> catalog{
      {MetricId::kmax, "kmax", "K_max", Orientation::maximize},
      {MetricId::qnx, "qnx", "Q_NX", Orientation::maximize},
      {MetricId::lcmc, "lcmc", "LCMC", Orientation::maximize},
      {MetricId::entropy, "entropy", "Entropy", Orientation::minimize},
      {MetricId::mutual_info, "mi", "Mutual Info", Orientation::maximize},
      {MetricId::local_error, "local-error", "Local Error", Orientation::minimize},
      {MetricId::spectral_overlap, "spectral-overlap", "Spectral Overlap", Orientation::maximize},
      {MetricId::spectral_overlap_simple, "spectral-overlap-simple", "Spectral Overlap (simple)",
       Orientation::maximize},
      {MetricId::spearman, "spearman", "Spearman", Orientation::maximize},
      {MetricId::procrustes, "procrustes", "Procrustes", Orientation::minimize},
      {MetricId::one_nn, "1nn", "1-NN", Orientation::maximize},
  };
  return catalog;
}

inline const MetricInfo& metric_info(MetricId id) {
  for (const auto& m : metric_catalog()) {
    if (m.id == id) return m;
  }
  fail("unknown metric id");
}

inline MetricId parse_metric(const std::string& key) {
  for (const auto& m : metric_catalog()) {
    if (key == m.key) return m.id;
  }
  fail("unknown metric '", key, "'");
}

inline Orientation orientation_of(MetricId id) { return metric_info(id).orientation; }

struct MetricScore {
  MetricId metric;
  double value = 0.0;
  Orientation orientation = Orientation::maximize;
  std::optional<std::size_t> k;          // neighborhood size, when the metric takes one
  std::map<std::string, double> aux;     // e.g. argmax_K for K_max
};

inline MetricScore make_score(MetricId id, double value) {
  return MetricScore{id, value, orientation_of(id), std::nullopt, {}};
}

namespace detail {

inline void check_k(const CoRankingMatrix& m, std::size_t k, const char* what) {
  if (k < 1 || k > m.dim()) fail(what, ": K must lie in [1, ", m.dim(), "], got ", k);
}

}  // namespace detail

// Number of ordered pairs whose high and low ranks are both <= K, for every
// K = 1..n-1 (index K-1). Q_NX(K) is this count over K*n.
inline std::vector<std::int64_t> agreement_counts(const CoRankingMatrix& m) {
  const std::size_t dim = m.dim();
  std::vector<std::int64_t> s(dim, 0);
  std::int64_t acc = 0;
  for (std::size_t K = 0; K < dim; ++K) {
    for (std::size_t l = 0; l <= K; ++l) acc += m(K, l);
    for (std::size_t k = 0; k < K; ++k) acc += m(k, K);
    s[K] = acc;
  }
  return s;
}

/// Q_NX(K) for K = 1..n-1.
inline std::vector<double> qnx_curve(const CoRankingMatrix& m) {
  const auto counts = agreement_counts(m);
  const double n = static_cast<double>(m.points());
  std::vector<double> q(counts.size());
  for (std::size_t K = 1; K <= counts.size(); ++K) {
    q[K - 1] = static_cast<double>(counts[K - 1]) / (static_cast<double>(K) * n);
  }
  return q;
}

inline MetricScore q_nx(const CoRankingMatrix& m, std::size_t K) {
  detail::check_k(m, K, "q_nx");
  std::int64_t s = 0;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = 0; l < K; ++l) s += m(k, l);
  }
  auto score = make_score(MetricId::qnx, static_cast<double>(s) / (static_cast<double>(K) * static_cast<double>(m.points())));
  score.k = K;
  return score;
}

// Q_NX averaged over every neighborhood size K = 1..n-1. This is the
// parameter-free form the benchmark harness scores with, since Q_NX(n-1) is
// identically 1.
inline MetricScore q_nx_mean(const CoRankingMatrix& m) {
  const auto q = qnx_curve(m);
  double s = 0.0;
  for (double v : q) s += v;
  return make_score(MetricId::qnx, s / static_cast<double>(q.size()));
}

inline MetricScore lcmc(const CoRankingMatrix& m, std::size_t K) {
  detail::check_k(m, K, "lcmc");
  const double q = q_nx(m, K).value;
  auto score = make_score(MetricId::lcmc, q - static_cast<double>(K) / static_cast<double>(m.dim()));
  score.k = K;
  return score;
}

/// max over K of LCMC(K); aux["argmax_K"] holds the smallest maximizing K.
inline MetricScore k_max_score(const CoRankingMatrix& m) {
  const auto q = qnx_curve(m);
  const double denom = static_cast<double>(m.dim());
  std::size_t best_k = 1;
  double best = q[0] - 1.0 / denom;
  for (std::size_t K = 2; K <= q.size(); ++K) {
    const double v = q[K - 1] - static_cast<double>(K) / denom;
    if (v > best) {
      best = v;
      best_k = K;
    }
  }
  auto score = make_score(MetricId::kmax, best);
  score.aux["argmax_K"] = static_cast<double>(best_k);
  return score;
}

/// Co-ranking counts normalized to a probability distribution over rank pairs.
struct JointRankDistribution {
  Matrix probabilities;

  Vector row_marginal() const { return probabilities.rowwise().sum(); }
  Vector col_marginal() const { return probabilities.colwise().sum().transpose(); }
};

inline JointRankDistribution joint_distribution(const CoRankingMatrix& m) {
  const auto dim = static_cast<Eigen::Index>(m.dim());
  const double total = static_cast<double>(m.points()) * static_cast<double>(m.dim());
  JointRankDistribution p{Matrix(dim, dim)};
  for (Eigen::Index k = 0; k < dim; ++k) {
    for (Eigen::Index l = 0; l < dim; ++l) {
      p.probabilities(k, l) = static_cast<double>(m(static_cast<std::size_t>(k), static_cast<std::size_t>(l))) / total;
    }
  }
  return p;
}

// Shannon entropy in nats; zero cells contribute nothing.
inline double shannon_entropy(const Vector& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

inline MetricScore entropy(const JointRankDistribution& p) {
  double h = 0.0;
  const auto& P = p.probabilities;
  for (Eigen::Index k = 0; k < P.rows(); ++k) {
    for (Eigen::Index l = 0; l < P.cols(); ++l) {
      const double v = P(k, l);
      if (v > 0.0) h -= v * std::log(v);
    }
  }
  return make_score(MetricId::entropy, h);
}

inline MetricScore mutual_information(const JointRankDistribution& p) {
  const Vector rows = p.row_marginal();
  const Vector cols = p.col_marginal();
  const auto& P = p.probabilities;
  double mi = 0.0;
  for (Eigen::Index k = 0; k < P.rows(); ++k) {
    for (Eigen::Index l = 0; l < P.cols(); ++l) {
      const double v = P(k, l);
      if (v > 0.0) mi += v * std::log(v / (rows[k] * cols[l]));
    }
  }
  return make_score(MetricId::mutual_info, std::max(mi, 0.0));
}

/// Squared distance errors weighted by n - r, where r is the high-dimensional
/// rank of the pair: a rank-r neighbor belongs to the neighborhoods of size
/// r..n-1.
inline MetricScore local_error(const DistanceMatrix& hi, const DistanceMatrix& lo, const RankMatrix& hi_ranks) {
  const auto n = static_cast<std::size_t>(hi.size());
  if (static_cast<std::size_t>(lo.size()) != n || hi_ranks.size() != n) {
    fail<DimensionMismatch>("local_error: point counts differ (", hi.size(), ", ", lo.size(), ", ", hi_ranks.size(), ")");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (j == k) continue;
      const double diff = hi.values(j, k) - lo.values(j, k);
      total += static_cast<double>(n - static_cast<std::size_t>(hi_ranks(j, k))) * diff * diff;
    }
  }
  return make_score(MetricId::local_error, total);
}

namespace detail {

inline void check_same(const RankMatrix& a, const RankMatrix& b, const char* what) {
  if (a.size() != b.size()) fail<DimensionMismatch>(what, ": rank matrices have ", a.size(), " and ", b.size(), " points");
  if (a.size() < 2) fail(what, ": need at least 2 points");
}

}  // namespace detail

// Edge (j, k) with k < j is shared by the two size-i KNN graphs exactly when
// i >= max(high rank, low rank), i.e. for n - max(...) of the sizes 1..n-1.
inline MetricScore spectral_overlap_simple(const RankMatrix& hi, const RankMatrix& lo) {
  detail::check_same(hi, lo, "spectral_overlap_simple");
  const std::size_t n = hi.size();
  std::int64_t overlap = 0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      overlap += static_cast<std::int64_t>(n) - std::max(hi(j, k), lo(j, k));
    }
  }
  const double nd = static_cast<double>(n);
  return make_score(MetricId::spectral_overlap_simple, 2.0 * static_cast<double>(overlap) / (nd * nd * (nd - 1.0)));
}

/// Harmonic-weighted mean of per-size KNN graph agreement. The agreement at
/// size i is the shared directed edge count over n*i, which equals Q_NX(i).
inline MetricScore spectral_overlap_weighted(const CoRankingMatrix& m) {
  const auto q = qnx_curve(m);
  double num = 0.0;
  double norm = 0.0;
  for (std::size_t i = 1; i <= q.size(); ++i) {
    const double w = 1.0 / static_cast<double>(i);
    num += w * q[i - 1];
    norm += w;
  }
  return make_score(MetricId::spectral_overlap, num / norm);
}

inline MetricScore spectral_overlap_weighted(const RankMatrix& hi, const RankMatrix& lo) {
  detail::check_same(hi, lo, "spectral_overlap_weighted");
  return spectral_overlap_weighted(coranking_matrix(hi, lo));
}

// Ranks 1..N with ties replaced by their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = avg;
    i = j;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) fail("correlation undefined: one input is constant");
  return sab / std::sqrt(saa * sbb);
}

/// Spearman correlation of the upper-triangular distances of both spaces.
inline MetricScore spearman_rho(const DistanceMatrix& hi, const DistanceMatrix& lo) {
  const auto n = hi.size();
  if (lo.size() != n) fail<DimensionMismatch>("spearman_rho: point counts differ (", n, ", ", lo.size(), ")");
  if (n < 3) fail("spearman_rho: need at least 3 points");
  std::vector<double> a, b;
  a.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  b.reserve(a.capacity());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      a.push_back(hi.values(i, j));
      b.push_back(lo.values(i, j));
    }
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  double rho = 0.0;
  try {
    rho = pearson(ra, rb);
  } catch (const Error&) {
    fail("spearman_rho: correlation undefined because all distances are equal in one space");
  }
  return make_score(MetricId::spearman, std::clamp(rho, -1.0, 1.0));
}

/// Residual of the best similarity alignment of y onto x:
/// min over orthogonal R and scale b of ||Xc - b Yc R||_F after centering.
inline MetricScore procrustes_distance(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    fail<DimensionMismatch>("procrustes_distance: shapes ", x.rows(), "x", x.cols(), " and ", y.rows(), "x", y.cols(),
                            " differ");
  }
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Matrix yc = y.rowwise() - y.colwise().mean();
  const double yy = yc.squaredNorm();
  if (yy == 0.0) return make_score(MetricId::procrustes, xc.norm());
  const Matrix cross = yc.transpose() * xc;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix rotation = svd.matrixU() * svd.matrixV().transpose();
  const double scale = svd.singularValues().sum() / yy;
  const double residual = (xc - scale * yc * rotation).norm();
  return make_score(MetricId::procrustes, residual);
}

/// Fraction of points whose nearest neighbor (rank 1) shares their label.
inline MetricScore one_nn_accuracy(const RankMatrix& ranks, const std::vector<int>& labels) {
  const std::size_t n = ranks.size();
  if (labels.size() != n) fail<DimensionMismatch>("one_nn_accuracy: ", labels.size(), " labels for ", n, " points");
  if (n < 2) fail("one_nn_accuracy: need at least 2 points");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && ranks(i, j) == 1) {
        hits += labels[i] == labels[j] ? 1 : 0;
        break;
      }
    }
  }
  return make_score(MetricId::one_nn, static_cast<double>(hits) / static_cast<double>(n));
}

inline MetricScore one_nn_accuracy(const Matrix& y, const std::optional<std::vector<int>>& labels) {
  if (!labels) fail("one_nn_accuracy: class labels are required");
  return one_nn_accuracy(rank_matrix(pairwise_distances(y)), *labels);
}

/// Shared inputs for scoring one embedding against its source.
class Evaluation {
 public:
  Evaluation(const Matrix& source, const Geometry& source_geometry, const Matrix& embedding,
             const std::optional<std::vector<int>>& labels)
      : source_(source), hi_(source_geometry), embedding_(embedding), labels_(labels) {
    if (source.rows() != embedding.rows()) {
      fail<DimensionMismatch>("embedding has ", embedding.rows(), " rows but the source has ", source.rows());
    }
    lo_ = Geometry::of(embedding);
  }

  const Geometry& high() const { return hi_; }
  const Geometry& low() const { return lo_; }

  const CoRankingMatrix& coranking() const {
    if (!coranking_) coranking_ = coranking_matrix(hi_.ranks, lo_.ranks);
    return *coranking_;
  }

  bool applicable(MetricId id) const {
    if (id == MetricId::procrustes) return source_.cols() == embedding_.cols();
    if (id == MetricId::one_nn) return labels_.has_value();
    return true;
  }

  // k overrides the neighborhood size for qnx/lcmc; lcmc requires it.
  MetricScore evaluate(MetricId id, std::optional<std::size_t> k = std::nullopt) const {
    switch (id) {
      case MetricId::kmax:
        return k_max_score(coranking());
      case MetricId::qnx:
        return k ? q_nx(coranking(), *k) : q_nx_mean(coranking());
      case MetricId::lcmc:
        if (!k) fail("lcmc: a neighborhood size K is required");
        return lcmc(coranking(), *k);
      case MetricId::entropy:
        return entropy(joint_distribution(coranking()));
      case MetricId::mutual_info:
        return mutual_information(joint_distribution(coranking()));
      case MetricId::local_error:
        return local_error(hi_.distances, lo_.distances, hi_.ranks);
      case MetricId::spectral_overlap:
        return spectral_overlap_weighted(coranking());
      case MetricId::spectral_overlap_simple:
        return spectral_overlap_simple(hi_.ranks, lo_.ranks);
      case MetricId::spearman:
        return spearman_rho(hi_.distances, lo_.distances);
      case MetricId::procrustes:
        return procrustes_distance(source_, embedding_);
      case MetricId::one_nn:
        if (!labels_) fail("1nn: the source data carries no class labels");
        return one_nn_accuracy(lo_.ranks, *labels_);
    }
    fail("unhandled metric");
  }

 private:
  const Matrix& source_;
  const Geometry& hi_;
  const Matrix& embedding_;
  const std::optional<std::vector<int>>& labels_;
  Geometry lo_;
  mutable std::optional<CoRankingMatrix> coranking_;
};

}  // namespace drbench
