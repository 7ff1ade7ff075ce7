#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drbench/common.hpp"
#include "drbench/hyperparams.hpp"

namespace drbench {

struct Provenance {
  std::string algorithm;
  HyperparamAssignment params;
  std::uint64_t seed = 0;
  int iterations = 0;
  double objective = 0.0;
  bool converged = true;
};

/// Low-dimensional output of a reducer plus how it was produced.
struct Embedding {
  Matrix points;
  Provenance provenance;
  std::vector<double> trace;  // objective per accepted step; empty for direct methods

  Eigen::Index n() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

inline Matrix centered(const Matrix& x) { return x.rowwise() - x.colwise().mean(); }

}  // namespace drbench
