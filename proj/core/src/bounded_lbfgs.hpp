#pragma once

// Projected limited-memory BFGS for box-constrained minimisation. Variables
// pinned at a bound with the gradient pointing outward are frozen for the
// step; the rest take a two-loop L-BFGS direction and a projected Armijo
// backtracking line search.

#include <Eigen/Dense>
#include <functional>

namespace gprllm::detail {

/// Returns f(x) and writes the gradient. May return +inf to reject a point.
using BoundedObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BoundedMinimizeOptions {
  int max_iterations = 100;
  double projected_gradient_tolerance = 1e-8;
  double function_tolerance = 1e-13;
  int memory = 6;
};

struct BoundedMinimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

BoundedMinimizeResult minimize_bounded(const BoundedObjective& objective, Eigen::VectorXd x0,
                                       const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                       const BoundedMinimizeOptions& opts = {});

}  // namespace gprllm::detail
