#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "drbench/common.hpp"

namespace drbench {

struct DescentOptions {
  int max_iterations = 300;
  double initial_step = 1.0;
  // Stop once an accepted step improves the objective by less than this
  // fraction of its magnitude.
  double relative_tolerance = 1e-12;
  // No point may move farther than this multiple of the starting
  // configuration's RMS radius in one step.
  double max_displacement = 1.0;
};

struct DescentResult {
  Matrix x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each accepted step, starting with the initial value
};

inline double rms_radius(const Matrix& x) {
  const Matrix c = x.rowwise() - x.colwise().mean();
  return std::sqrt(c.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(x.rows(), 1)));
}

/// Gradient descent with step halving. A trial step is accepted only if it
/// strictly lowers the objective, so the trace is non-increasing. Accepted
/// steps grow the step size by 1.5x; rejected ones halve it.
///
/// Objective must provide
///   double value(const Matrix&) const;
///   double value_and_gradient(const Matrix&, Matrix& grad) const;
template <typename Objective>
DescentResult descend(const Objective& f, Matrix x, const DescentOptions& opts) {
  DescentResult out;
  Matrix grad(x.rows(), x.cols());
  double fx = f.value_and_gradient(x, grad);
  out.trace.push_back(fx);
  const double radius = std::max(rms_radius(x), 1e-12);
  const double max_move = opts.max_displacement * radius;
  double step = opts.initial_step;
  Matrix trial(x.rows(), x.cols());

  for (int it = 0; it < opts.max_iterations; ++it) {
    const double gmax = grad.rowwise().norm().maxCoeff();
    if (!(gmax > 0.0)) {
      out.converged = true;
      break;
    }
    step = std::min(step, max_move / gmax);
    bool accepted = false;
    double ft = fx;
    while (step * gmax > 1e-14 * radius) {
      trial = x - step * grad;
      ft = f.value(trial);
      if (std::isfinite(ft) && ft < fx) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.converged = true;
      break;
    }
    const double improvement = (fx - ft) / std::max(std::abs(fx), 1e-300);
    x.swap(trial);
    fx = f.value_and_gradient(x, grad);
    out.trace.push_back(fx);
    out.iterations = it + 1;
    step *= 1.5;
    if (improvement < opts.relative_tolerance) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  out.value = fx;
  return out;
}

// Central finite-difference gradient, used to validate analytic gradients.
template <typename Objective>
Matrix numeric_gradient(const Objective& f, const Matrix& x, double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = f.value(probe);
      probe(i, j) = orig - h;
      const double down = f.value(probe);
      probe(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace drbench
