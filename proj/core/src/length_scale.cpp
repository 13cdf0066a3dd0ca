#include <cmath>
#include <limits>

#include "bounded_lbfgs.hpp"
#include "gprllm/error.hpp"
#include "gprllm/gpr.hpp"

namespace gprllm::gpr {

namespace {

struct Evaluation {
  double lml = -std::numeric_limits<double>::infinity();
  double grad_log_ell = 0.0;
  bool ok = false;
};

Evaluation evaluate(double ell, const Eigen::VectorXd& query, double s_max, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y, double alpha) {
  Evaluation e;
  try {
    const GprModel m = fit(KernelSpec::rbf(ell), alpha, query, s_max, X, y);
    e.lml = log_marginal_likelihood(m);
    e.grad_log_ell = log_marginal_likelihood_grad_log_ell(m);
    e.ok = std::isfinite(e.lml) && std::isfinite(e.grad_log_ell);
  } catch (const DataError&) {
    e.ok = false;
  }
  return e;
}

}  // namespace

LengthScaleResult optimize_length_scale(const Eigen::VectorXd& query_embedding, double s_max,
                                        const Eigen::MatrixXd& sample_X, const Eigen::VectorXd& sample_y,
                                        double alpha, const LengthScaleOptions& opts) {
  const auto [lo, hi] = opts.bounds;
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
    throw ConfigError("length-scale bounds must satisfy 0 < lo <= hi");
  }
  if (!(opts.init >= lo && opts.init <= hi)) {
    throw ConfigError("initial length scale must lie within the bounds");
  }

  LengthScaleResult best;
  best.length_scale = opts.init;
  if (sample_X.rows() == 0) {
    // Only the query row: the likelihood carries no information about ell.
    const Evaluation e = evaluate(opts.init, query_embedding, s_max, sample_X, sample_y, alpha);
    best.log_marginal_likelihood = e.lml;
    best.converged = true;
    return best;
  }

  auto consider = [&](double ell, const Evaluation& e) {
    if (e.ok && e.lml > best.log_marginal_likelihood) {
      best.length_scale = ell;
      best.log_marginal_likelihood = e.lml;
    }
  };
  best.log_marginal_likelihood = -std::numeric_limits<double>::infinity();
  consider(opts.init, evaluate(opts.init, query_embedding, s_max, sample_X, sample_y, alpha));

  // Minimise -LML over t = log(ell).
  detail::BoundedObjective objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd& grad) {
    const Evaluation e = evaluate(std::exp(t(0)), query_embedding, s_max, sample_X, sample_y, alpha);
    grad.resize(1);
    if (!e.ok) {
      grad(0) = 0.0;
      return std::numeric_limits<double>::infinity();
    }
    grad(0) = -e.grad_log_ell;
    return -e.lml;
  };
  detail::BoundedMinimizeOptions mo;
  mo.max_iterations = opts.max_iterations;
  mo.projected_gradient_tolerance = opts.gradient_tolerance;
  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(1, std::log(lo));
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(1, std::log(hi));
  const auto r = detail::minimize_bounded(objective, Eigen::VectorXd::Constant(1, std::log(opts.init)), lower,
                                          upper, mo);
  best.iterations = r.iterations;
  best.converged = r.converged;
  if (std::isfinite(r.f)) {
    const double ell = std::clamp(std::exp(r.x(0)), lo, hi);
    consider(ell, evaluate(ell, query_embedding, s_max, sample_X, sample_y, alpha));
  }

  // The LML surface is often multimodal in ell; a coarse grid guards
  // against the local search settling in a poor basin.
  for (double ell : kLengthScaleGrid) {
    if (ell < lo || ell > hi) continue;
    const Evaluation e = evaluate(ell, query_embedding, s_max, sample_X, sample_y, alpha);
    if (e.ok && e.lml > best.log_marginal_likelihood) {
      // Polish from the better grid point.
      const auto polished = detail::minimize_bounded(objective, Eigen::VectorXd::Constant(1, std::log(ell)),
                                                     lower, upper, mo);
      consider(ell, e);
      if (std::isfinite(polished.f)) {
        const double pe = std::clamp(std::exp(polished.x(0)), lo, hi);
        consider(pe, evaluate(pe, query_embedding, s_max, sample_X, sample_y, alpha));
      }
      best.iterations += polished.iterations;
    }
  }
  return best;
}

}  // namespace gprllm::gpr
