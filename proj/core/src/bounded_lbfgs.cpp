#include "bounded_lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace gprllm::detail {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Two-loop recursion restricted to the free variables (mask = 1).
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g, const Eigen::VectorXd& mask,
                                const std::deque<CurvaturePair>& pairs) {
  Eigen::VectorXd q = g.cwiseProduct(mask);
  std::vector<double> a(pairs.size());
  for (std::size_t k = pairs.size(); k-- > 0;) {
    const auto& p = pairs[k];
    a[k] = p.rho * p.s.cwiseProduct(mask).dot(q);
    q -= a[k] * p.y.cwiseProduct(mask);
  }
  if (!pairs.empty()) {
    const auto& last = pairs.back();
    const double yy = last.y.cwiseProduct(mask).squaredNorm();
    if (yy > 0.0) q *= last.s.cwiseProduct(mask).dot(last.y.cwiseProduct(mask)) / yy;
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    const double b = p.rho * p.y.cwiseProduct(mask).dot(q);
    q += (a[k] - b) * p.s.cwiseProduct(mask);
  }
  return -q.cwiseProduct(mask);
}

}  // namespace

BoundedMinimizeResult minimize_bounded(const BoundedObjective& objective, Eigen::VectorXd x0,
                                       const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                       const BoundedMinimizeOptions& opts) {
  const Eigen::Index n = x0.size();
  BoundedMinimizeResult res;
  res.x = project(x0, lower, upper);
  Eigen::VectorXd g(n);
  res.f = objective(res.x, g);
  if (!std::isfinite(res.f)) {
    return res;
  }

  std::deque<CurvaturePair> pairs;
  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    const Eigen::VectorXd pg = res.x - project(res.x - g, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() < opts.projected_gradient_tolerance) {
      res.converged = true;
      return res;
    }

    Eigen::VectorXd mask = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((res.x(i) <= lower(i) && g(i) > 0.0) || (res.x(i) >= upper(i) && g(i) < 0.0)) mask(i) = 0.0;
    }
    Eigen::VectorXd d = lbfgs_direction(g, mask, pairs);
    if (d.dot(g) >= 0.0) {
      pairs.clear();
      d = -g.cwiseProduct(mask);
    }

    double step = pairs.empty() ? std::min(1.0, 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1e-12)) : 1.0;
    Eigen::VectorXd x_new, g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      x_new = project(res.x + step * d, lower, upper);
      f_new = objective(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * g.dot(x_new - res.x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No descent possible along the projected direction: stationary to
      // working precision.
      res.converged = true;
      return res;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    const double f_old = res.f;
    res.x = x_new;
    res.f = f_new;
    g = g_new;
    if (sy > 1e-12 * std::max(1.0, y.squaredNorm())) {
      pairs.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(pairs.size()) > opts.memory) pairs.pop_front();
    }
    if (std::abs(f_old - f_new) <= opts.function_tolerance * std::max(1.0, std::abs(f_old))) {
      res.converged = true;
      ++res.iterations;
      return res;
    }
  }
  return res;
}

}  // namespace gprllm::detail
