#pragma once

// Per-query Gaussian process regression over passage embeddings.
//
// The training set always starts with the query embedding labelled with the
// maximum attainable score, followed by the judged passages. All linear
// algebra runs in double precision.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>

#include "gprllm/corpus.hpp"

namespace gprllm::gpr {

enum class KernelKind { dot, cosine, rbf };

KernelKind parse_kernel(std::string_view name);
std::string_view to_string(KernelKind kind) noexcept;

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double length_scale = 1.0;  // rbf only

  static KernelSpec dot() { return {KernelKind::dot, 1.0}; }
  static KernelSpec cosine() { return {KernelKind::cosine, 1.0}; }
  static KernelSpec rbf(double ell) { return {KernelKind::rbf, ell}; }

  void validate() const;
};

/// k(x, y). Cosine treats a zero-norm input as similarity 0.
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// Entry (i, j) = k(X_i, Z_j) for row-wise point sets.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z);

/// k(x, x) for every row.
Eigen::VectorXd kernel_diagonal(const KernelSpec& spec, const Eigen::MatrixXd& X);

struct GprModel {
  KernelSpec kernel;
  double alpha = 0.0;            // requested noise variance
  double effective_alpha = 0.0;  // alpha after jitter escalation
  int jitter_steps = 0;
  Eigen::MatrixXd train_X;       // (R+1) x D, row 0 is the query
  Eigen::VectorXd train_y;       // (R+1), y(0) = s_max
  Eigen::MatrixXd chol_L;        // lower factor of K + effective_alpha I
  Eigen::VectorXd weights;       // (K + effective_alpha I)^-1 y

  std::size_t size() const noexcept { return static_cast<std::size_t>(train_y.size()); }
};

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

struct FitOptions {
  int max_jitter_steps = 6;
};

/// Fits on {(query, s_max)} U {(sample_X_i, sample_y_i)}. On a failed
/// Cholesky the diagonal is escalated to max(alpha, 1e-10) * 10^j for
/// j = 1..6 before giving up with a DataError.
GprModel fit(const KernelSpec& kernel, double alpha, const Eigen::VectorXd& query_embedding, double s_max,
             const Eigen::MatrixXd& sample_X, const Eigen::VectorXd& sample_y, const FitOptions& opts = {});

Eigen::VectorXd predict_mean(const GprModel& model, const Eigen::MatrixXd& X_star);
/// Clamped at zero; computed through triangular solves against chol_L.
Eigen::VectorXd predict_var(const GprModel& model, const Eigen::MatrixXd& X_star);
Posterior predict(const GprModel& model, const Eigen::MatrixXd& X_star);

/// Posterior mean for every row of a float embedding matrix, processed in
/// row blocks so memory stays bounded by block * (R+1).
Eigen::VectorXd predict_mean(const GprModel& model, const corpus::EmbeddingMatrix& embeddings);

/// -1/2 y^T K^-1 y - sum log L_ii - n/2 log 2 pi.
double log_marginal_likelihood(const GprModel& model);

/// d LML / d log(ell) for an RBF model (analytic).
double log_marginal_likelihood_grad_log_ell(const GprModel& model);

struct LengthScaleOptions {
  double init = 1.0;
  std::pair<double, double> bounds{1e-3, 1e3};
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
};

struct LengthScaleResult {
  double length_scale = 1.0;
  double log_marginal_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;  // false: best iterate returned after hitting max_iterations
};

/// Fallback grid evaluated alongside the quasi-Newton search.
inline constexpr double kLengthScaleGrid[] = {1e-3, 1e-1, 1.0, 10.0, 100.0, 1000.0};

/// Maximises the RBF log marginal likelihood over log(ell) within bounds by a
/// bounded quasi-Newton search. The result is never worse than the best
/// in-bounds grid point. A query-only training set returns init unchanged.
LengthScaleResult optimize_length_scale(const Eigen::VectorXd& query_embedding, double s_max,
                                        const Eigen::MatrixXd& sample_X, const Eigen::VectorXd& sample_y,
                                        double alpha, const LengthScaleOptions& opts = {});

/// Row i of the matrix as a double vector.
Eigen::VectorXd to_vector(std::span<const float> values);
/// Gathers the given rows of an embedding matrix as doubles.
Eigen::MatrixXd gather_rows(const corpus::EmbeddingMatrix& m, std::span<const std::uint32_t> rows);

}  // namespace gprllm::gpr
