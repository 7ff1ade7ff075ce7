#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "drbench/common.hpp"
#include "drbench/rng.hpp"

namespace drbench {

/// Observations with optional class labels and generator provenance.
struct PointSet {
  Matrix points;
  std::optional<std::vector<int>> labels;
  std::string generator;
  std::string variant;
  std::uint64_t seed = 0;

  Eigen::Index n() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

struct TrefoilOptions {
  double noise_variance = 0.01;
};

struct CirclesOptions {
  double noise_variance = 0.0004;
};

enum class TwoLinesVariant { formula, lines };

inline PointSet gen_two_lines(std::size_t n, std::uint64_t seed, TwoLinesVariant variant = TwoLinesVariant::formula) {
  if (n < 4) fail("two-lines: n must be at least 4, got ", n);
  const std::size_t m = n / 2;
  PointSet ps;
  ps.generator = "two-lines";
  ps.variant = variant == TwoLinesVariant::formula ? "formula" : "lines";
  ps.seed = seed;
  ps.points.resize(static_cast<Eigen::Index>(2 * m), 2);
  ps.labels = std::vector<int>(2 * m);
  Rng rng(seed, "two-lines");
  for (std::size_t g = 0; g < 2; ++g) {
    const double offset = g == 0 ? 5.0 : -5.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto row = static_cast<Eigen::Index>(g * m + i);
      if (variant == TwoLinesVariant::formula) {
        ps.points(row, 0) = 2.0 * rng.normal() + offset;
        ps.points(row, 1) = 2.0 * rng.normal() + offset;
      } else {
        const double t = m == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(m - 1);
        ps.points(row, 0) = -10.0 + 20.0 * t + 0.1 * rng.normal();
        ps.points(row, 1) = offset + 0.1 * rng.normal();
      }
      (*ps.labels)[static_cast<std::size_t>(row)] = static_cast<int>(g) + 1;
    }
  }
  return ps;
}

inline PointSet gen_three_gaussians(std::size_t n, std::uint64_t seed) {
  if (n < 6) fail("three-gaussians: n must be at least 6, got ", n);
  const std::size_t m = n / 3;
  constexpr std::array<double, 3> means{-5.0, -10.0, 20.0};
  constexpr std::array<double, 3> variances{1.0, 1.0, 10.0};
  PointSet ps;
  ps.generator = "three-gaussians";
  ps.seed = seed;
  ps.points.resize(static_cast<Eigen::Index>(3 * m), 2);
  ps.labels = std::vector<int>(3 * m);
  Rng rng(seed, "three-gaussians");
  for (std::size_t g = 0; g < 3; ++g) {
    const double sd = std::sqrt(variances[g]);
    for (std::size_t i = 0; i < m; ++i) {
      const auto row = static_cast<Eigen::Index>(g * m + i);
      ps.points(row, 0) = rng.normal(means[g], sd);
      ps.points(row, 1) = rng.normal(means[g], sd);
      (*ps.labels)[static_cast<std::size_t>(row)] = static_cast<int>(g) + 1;
    }
  }
  return ps;
}

// Noise-free trefoil projection at angle phi.
inline std::array<double, 2> trefoil_point(double phi) {
  return {std::sin(phi) + 2.0 * std::sin(2.0 * phi), std::cos(phi) - 2.0 * std::cos(2.0 * phi)};
}

inline PointSet gen_trefoil(std::size_t n, std::uint64_t seed, TrefoilOptions opts = {}) {
  if (n < 8) fail("trefoil: n must be at least 8, got ", n);
  PointSet ps;
  ps.generator = "trefoil";
  ps.seed = seed;
  ps.points.resize(static_cast<Eigen::Index>(n), 2);
  Rng rng(seed, "trefoil");
  const double sd = std::sqrt(opts.noise_variance);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    const auto p = trefoil_point(phi);
    const auto row = static_cast<Eigen::Index>(i);
    ps.points(row, 0) = p[0] + sd * rng.normal();
    ps.points(row, 1) = p[1] + sd * rng.normal();
  }
  return ps;
}

constexpr double kCurvedXsHalfWidth = 2.1147;

// Upper curve before rotation; the lower curve is its negation.
inline double curved_xs_upper(double x) {
  return 50.0 + std::sin(10.0 * std::numbers::pi * x) * std::pow(x, 4);
}

// The curves carry no noise, so the seed only lands in the provenance.
inline PointSet gen_curved_xs(std::size_t n, std::uint64_t seed) {
  if (n < 4) fail("curved-xs: n must be at least 4, got ", n);
  const std::size_t m = n / 2;
  PointSet ps;
  ps.generator = "curved-xs";
  ps.seed = seed;
  ps.points.resize(static_cast<Eigen::Index>(2 * m), 2);
  ps.labels = std::vector<int>(2 * m);
  const double c = std::cos(std::numbers::pi / 4.0);
  const double s = std::sin(std::numbers::pi / 4.0);
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t i = 0; i < m; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(m - 1);
      const double x = -kCurvedXsHalfWidth + 2.0 * kCurvedXsHalfWidth * t;
      const double y = g == 0 ? curved_xs_upper(x) : -curved_xs_upper(x);
      const auto row = static_cast<Eigen::Index>(g * m + i);
      // Row vector [x y] times [[c, s], [-s, c]].
      ps.points(row, 0) = x * c - y * s;
      ps.points(row, 1) = x * s + y * c;
      (*ps.labels)[static_cast<std::size_t>(row)] = static_cast<int>(g) + 1;
    }
  }
  return ps;
}

inline PointSet gen_noisy_circles(std::size_t n, std::uint64_t seed, CirclesOptions opts = {}) {
  if (n < 8 || n % 2 != 0) fail("noisy-circles: n must be even and at least 8, got ", n);
  const std::size_t m = n / 2;
  PointSet ps;
  ps.generator = "noisy-circles";
  ps.seed = seed;
  ps.points.resize(static_cast<Eigen::Index>(n), 2);
  ps.labels = std::vector<int>(n);
  Rng rng(seed, "noisy-circles");
  const double sd = std::sqrt(opts.noise_variance);
  constexpr std::array<double, 2> radii{0.5, 1.0};
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t i = 0; i < m; ++i) {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(m);
      const auto row = static_cast<Eigen::Index>(g * m + i);
      ps.points(row, 0) = radii[g] * std::cos(phi) + sd * rng.normal();
      ps.points(row, 1) = radii[g] * std::sin(phi) + sd * rng.normal();
      (*ps.labels)[static_cast<std::size_t>(row)] = static_cast<int>(g) + 1;
    }
  }
  return ps;
}

// Corner c of {0,5}^4, lexicographic with the last coordinate varying fastest.
inline std::array<double, 4> hypercube_corner(std::size_t c) {
  std::array<double, 4> mu{};
  for (std::size_t b = 0; b < 4; ++b) mu[b] = ((c >> (3 - b)) & 1U) ? 5.0 : 0.0;
  return mu;
}

inline PointSet gen_hd_clusters(std::size_t n, std::uint64_t seed) {
  if (n == 0 || n % 16 != 0) fail("hd-clusters: n must be a positive multiple of 16, got ", n);
  const std::size_t per = n / 16;
  PointSet ps;
  ps.generator = "hd-clusters";
  ps.seed = seed;
  ps.points.resize(static_cast<Eigen::Index>(n), 4);
  ps.labels = std::vector<int>(n);
  Rng rng(seed, "hd-clusters");
  for (std::size_t c = 0; c < 16; ++c) {
    const auto mu = hypercube_corner(c);
    for (std::size_t i = 0; i < per; ++i) {
      const auto row = static_cast<Eigen::Index>(c * per + i);
      for (Eigen::Index k = 0; k < 4; ++k) ps.points(row, k) = rng.normal(mu[static_cast<std::size_t>(k)], 1.0);
      (*ps.labels)[static_cast<std::size_t>(row)] = static_cast<int>(c) + 1;
    }
  }
  return ps;
}

inline const std::vector<std::string>& dataset_names() {
  static const std::vector<std::string> names{"two-lines", "three-gaussians", "trefoil",
                                              "curved-xs", "noisy-circles", "hd-clusters"};
  return names;
}

// Point count used by the benchmark protocol when a plan leaves n unset.
inline std::size_t default_dataset_size(const std::string& name) {
  return name == "hd-clusters" ? 800 : 250;
}

// Intrinsic dimension of each generator's manifold, known by construction.
inline int intrinsic_dimension(const std::string& name) { return name == "hd-clusters" ? 4 : 2; }

inline PointSet generate_dataset(const std::string& name, std::size_t n, std::uint64_t seed,
                                 const std::string& variant = "") {
  if (!variant.empty() && name != "two-lines") fail("dataset '", name, "' has no variants");
  if (name == "two-lines") {
    if (variant.empty() || variant == "formula") return gen_two_lines(n, seed, TwoLinesVariant::formula);
    if (variant == "lines") return gen_two_lines(n, seed, TwoLinesVariant::lines);
    fail("two-lines: unknown variant '", variant, "' (expected formula or lines)");
  }
  if (name == "three-gaussians") return gen_three_gaussians(n, seed);
  if (name == "trefoil") return gen_trefoil(n, seed);
  if (name == "curved-xs") return gen_curved_xs(n, seed);
  if (name == "noisy-circles") return gen_noisy_circles(n, seed);
  if (name == "hd-clusters") return gen_hd_clusters(n, seed);
  fail("unknown dataset '", name, "'");
}

}  // namespace drbench
