#include "gprllm/gpr.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "block_ops.hpp"
#include "gprllm/error.hpp"

namespace gprllm::gpr {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Cross kernel for a block of prediction rows against the training set. Dot
// and cosine reuse the dense-retrieval inner products; rbf uses the expanded
// squared distance so the block runs as one matrix product.
Eigen::MatrixXd block_cross_kernel(const GprModel& model, const Eigen::MatrixXd& block,
                                   const Eigen::VectorXd& train_sq_norms) {
  Eigen::MatrixXd K = detail::inner_products(block, model.train_X);
  switch (model.kernel.kind) {
    case KernelKind::dot:
      break;
    case KernelKind::cosine: {
      const Eigen::VectorXd nb = block.rowwise().norm();
      for (Eigen::Index j = 0; j < K.cols(); ++j) {
        const double nz = std::sqrt(train_sq_norms(j));
        for (Eigen::Index i = 0; i < K.rows(); ++i) K(i, j) = detail::safe_cosine(K(i, j), nb(i), nz);
      }
      break;
    }
    case KernelKind::rbf: {
      const double scale = -0.5 / (model.kernel.length_scale * model.kernel.length_scale);
      const Eigen::VectorXd nb = block.rowwise().squaredNorm();
      for (Eigen::Index j = 0; j < K.cols(); ++j)
        for (Eigen::Index i = 0; i < K.rows(); ++i) {
          const double d2 = std::max(0.0, nb(i) + train_sq_norms(j) - 2.0 * K(i, j));
          K(i, j) = std::exp(scale * d2);
        }
      break;
    }
  }
  return K;
}

}  // namespace

GprModel fit(const KernelSpec& kernel, double alpha, const Eigen::VectorXd& query_embedding, double s_max,
             const Eigen::MatrixXd& sample_X, const Eigen::VectorXd& sample_y, const FitOptions& opts) {
  kernel.validate();
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("alpha must be a finite non-negative number");
  }
  if (sample_X.rows() != sample_y.size()) {
    throw DataError("fit: " + std::to_string(sample_X.rows()) + " sample rows but " +
                    std::to_string(sample_y.size()) + " targets");
  }
  if (sample_X.rows() > 0 && sample_X.cols() != query_embedding.size()) {
    throw DataError("fit: sample dim " + std::to_string(sample_X.cols()) + " does not match query dim " +
                    std::to_string(query_embedding.size()));
  }
  if (!query_embedding.allFinite() || !all_finite(sample_X) || !sample_y.allFinite() || !std::isfinite(s_max)) {
    throw DataError("fit: non-finite input");
  }

  GprModel model;
  model.kernel = kernel;
  model.alpha = alpha;
  const Eigen::Index n = sample_X.rows() + 1;
  model.train_X.resize(n, query_embedding.size());
  model.train_X.row(0) = query_embedding.transpose();
  if (n > 1) model.train_X.bottomRows(n - 1) = sample_X;
  model.train_y.resize(n);
  model.train_y(0) = s_max;
  if (n > 1) model.train_y.tail(n - 1) = sample_y;

  const Eigen::MatrixXd K = kernel_matrix(kernel, model.train_X, model.train_X);
  for (int step = 0; step <= opts.max_jitter_steps; ++step) {
    const double a = step == 0 ? alpha : std::max(alpha, 1e-10) * std::pow(10.0, step);
    Eigen::MatrixXd Ka = K;
    Ka.diagonal().array() += a;
    Eigen::LLT<Eigen::MatrixXd> llt(Ka);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd L = llt.matrixL();
    if (!L.allFinite() || (L.diagonal().array() <= 0.0).any()) continue;
    model.effective_alpha = a;
    model.jitter_steps = step;
    model.chol_L = std::move(L);
    model.weights = llt.solve(model.train_y);
    return model;
  }
  throw DataError("fit: kernel matrix is not positive definite after jitter escalation to " +
                  std::to_string(std::max(alpha, 1e-10) * std::pow(10.0, opts.max_jitter_steps)));
}

Eigen::VectorXd predict_mean(const GprModel& model, const Eigen::MatrixXd& X_star) {
  if (X_star.rows() == 0) return Eigen::VectorXd(0);
  return kernel_matrix(model.kernel, X_star, model.train_X) * model.weights;
}

Eigen::VectorXd predict_var(const GprModel& model, const Eigen::MatrixXd& X_star) {
  if (X_star.rows() == 0) return Eigen::VectorXd(0);
  const Eigen::MatrixXd Kst = kernel_matrix(model.kernel, model.train_X, X_star);  // (R+1) x m
  const Eigen::MatrixXd V = model.chol_L.triangularView<Eigen::Lower>().solve(Kst);
  Eigen::VectorXd var = kernel_diagonal(model.kernel, X_star) - V.colwise().squaredNorm().transpose();
  return var.cwiseMax(0.0);
}

Posterior predict(const GprModel& model, const Eigen::MatrixXd& X_star) {
  return {predict_mean(model, X_star), predict_var(model, X_star)};
}

Eigen::VectorXd predict_mean(const GprModel& model, const corpus::EmbeddingMatrix& embeddings) {
  if (!embeddings.empty() && static_cast<Eigen::Index>(embeddings.dim()) != model.train_X.cols()) {
    throw DataError("predict_mean: embedding dim " + std::to_string(embeddings.dim()) +
                    " does not match model dim " + std::to_string(model.train_X.cols()));
  }
  const Eigen::VectorXd train_sq_norms = model.train_X.rowwise().squaredNorm();
  Eigen::VectorXd mean(static_cast<Eigen::Index>(embeddings.rows()));
  detail::for_each_block(embeddings.rows(), [&](std::size_t begin, std::size_t count) {
    const Eigen::MatrixXd block = detail::promote_rows(embeddings, begin, count);
    mean.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) =
        block_cross_kernel(model, block, train_sq_norms) * model.weights;
  });
  return mean;
}

double log_marginal_likelihood(const GprModel& model) {
  const double n = static_cast<double>(model.train_y.size());
  return -0.5 * model.train_y.dot(model.weights) - model.chol_L.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

double log_marginal_likelihood_grad_log_ell(const GprModel& model) {
  if (model.kernel.kind != KernelKind::rbf) return 0.0;
  const Eigen::Index n = model.train_X.rows();
  const double ell2 = model.kernel.length_scale * model.kernel.length_scale;
  // dK/dlog(ell) = K .* D2 / ell^2 (noise term does not depend on ell).
  Eigen::MatrixXd dK(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d2 = (model.train_X.row(i) - model.train_X.row(j)).squaredNorm();
      dK(i, j) = std::exp(-0.5 * d2 / ell2) * d2 / ell2;
    }
  Eigen::MatrixXd Kinv = Eigen::MatrixXd::Identity(n, n);
  model.chol_L.triangularView<Eigen::Lower>().solveInPlace(Kinv);
  model.chol_L.transpose().triangularView<Eigen::Upper>().solveInPlace(Kinv);
  const double data_term = model.weights.dot(dK * model.weights);
  const double trace_term = (Kinv.array() * dK.array()).sum();
  return 0.5 * (data_term - trace_term);
}

Eigen::VectorXd to_vector(std::span<const float> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  return v;
}

Eigen::MatrixXd gather_rows(const corpus::EmbeddingMatrix& m, std::span<const std::uint32_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = m.row(rows[i]);
    for (std::size_t j = 0; j < r.size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
  }
  return out;
}

}  // namespace gprllm::gpr
