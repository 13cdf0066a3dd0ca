#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gprllm/error.hpp"
#include "gprllm/gpr.hpp"
#include "oracles.hpp"

using namespace gprllm;
using namespace gprllm::gpr;

namespace {

// Targets drawn from a zero-mean GP with an RBF(ell_true) prior plus noise.
struct Draw {
  Eigen::VectorXd q;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double s_max;
};

Draw generative(std::uint64_t seed, Eigen::Index n, Eigen::Index d, double ell_true, double alpha) {
  std::mt19937_64 gen(seed);
  const auto pts = oracle::random_matrix(gen, n, d);
  Eigen::MatrixXd K = kernel_matrix(KernelSpec::rbf(ell_true), pts, pts);
  K.diagonal().array() += alpha;
  const Eigen::MatrixXd L = K.llt().matrixL();
  const Eigen::VectorXd f = L * oracle::random_matrix(gen, n, 1).col(0);
  return {pts.row(0).transpose(), pts.bottomRows(n - 1), f.tail(n - 1), f[0]};
}

double lml_at(const Draw& d, double ell, double alpha) {
  return log_marginal_likelihood(fit(KernelSpec::rbf(ell), alpha, d.q, d.s_max, d.X, d.y));
}

}  // namespace

TEST(LengthScale, NeverWorseThanGrid) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 10; ++t) {
    const auto X = oracle::random_matrix(gen, 30, 6);
    Eigen::VectorXd y(30);
    std::uniform_real_distribution<double> u(0, 3);
    for (auto& v : y) v = u(gen);
    const auto q = oracle::random_matrix(gen, 1, 6).row(0).transpose().eval();
    const auto r = optimize_length_scale(q, 3.0, X, y, 1e-3);
    for (double g : kLengthScaleGrid) {
      const double lg = log_marginal_likelihood(fit(KernelSpec::rbf(g), 1e-3, q, 3.0, X, y));
      EXPECT_GE(r.log_marginal_likelihood, lg - 1e-6) << "grid " << g;
    }
    EXPECT_NEAR(r.log_marginal_likelihood,
                log_marginal_likelihood(fit(KernelSpec::rbf(r.length_scale), 1e-3, q, 3.0, X, y)), 1e-9);
  }
}

TEST(LengthScale, RecoversGenerativeScale) {
  std::vector<double> found;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto d = generative(100 + s, 41, 2, 1.0, 1e-2);
    found.push_back(optimize_length_scale(d.q, d.s_max, d.X, d.y, 1e-2).length_scale);
  }
  std::nth_element(found.begin(), found.begin() + 10, found.end());
  EXPECT_GE(found[10], 0.5);
  EXPECT_LE(found[10], 2.0);
}

TEST(LengthScale, StationaryPointWhenInterior) {
  const auto d = generative(7, 41, 2, 1.0, 1e-2);
  const auto r = optimize_length_scale(d.q, d.s_max, d.X, d.y, 1e-2);
  ASSERT_GT(r.length_scale, 1e-2);
  ASSERT_LT(r.length_scale, 1e2);
  const auto m = fit(KernelSpec::rbf(r.length_scale), 1e-2, d.q, d.s_max, d.X, d.y);
  EXPECT_LT(std::abs(log_marginal_likelihood_grad_log_ell(m)), 1e-4);
  const double h = 1e-3;
  EXPECT_GE(r.log_marginal_likelihood, lml_at(d, r.length_scale * std::exp(h), 1e-2) - 1e-9);
  EXPECT_GE(r.log_marginal_likelihood, lml_at(d, r.length_scale * std::exp(-h), 1e-2) - 1e-9);
}

TEST(LengthScale, QueryOnlyReturnsInit) {
  Eigen::VectorXd q(2);
  q << 1, 2;
  LengthScaleOptions opts;
  opts.init = 3.7;
  const auto r = optimize_length_scale(q, 3.0, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), 0.0, opts);
  EXPECT_EQ(r.length_scale, 3.7);
}

TEST(LengthScale, RespectsBounds) {
  const auto d = generative(8, 30, 2, 1.0, 1e-2);
  LengthScaleOptions opts;
  opts.bounds = {5.0, 50.0};
  opts.init = 10.0;
  const auto r = optimize_length_scale(d.q, d.s_max, d.X, d.y, 1e-2, opts);
  EXPECT_GE(r.length_scale, 5.0);
  EXPECT_LE(r.length_scale, 50.0);
  // The likelihood peaks near 1, below the bracket: the lower bound is optimal.
  EXPECT_NEAR(r.length_scale, 5.0, 1e-6);
}

TEST(LengthScale, InvalidOptions) {
  const auto d = generative(9, 10, 2, 1.0, 1e-2);
  LengthScaleOptions bad;
  bad.bounds = {2.0, 1.0};
  EXPECT_THROW(optimize_length_scale(d.q, d.s_max, d.X, d.y, 1e-2, bad), ConfigError);
  LengthScaleOptions out;
  out.init = 1e4;
  EXPECT_THROW(optimize_length_scale(d.q, d.s_max, d.X, d.y, 1e-2, out), ConfigError);
}
