#include <cmath>
#include <string>

#include "block_ops.hpp"
#include "gprllm/error.hpp"
#include "gprllm/gpr.hpp"

namespace gprllm::gpr {

KernelKind parse_kernel(std::string_view name) {
  if (name == "dot") return KernelKind::dot;
  if (name == "cosine" || name == "cos") return KernelKind::cosine;
  if (name == "rbf") return KernelKind::rbf;
  throw ConfigError("unknown kernel '" + std::string(name) + "' (expected dot, cosine or rbf)");
}

std::string_view to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::dot:
      return "dot";
    case KernelKind::cosine:
      return "cosine";
    case KernelKind::rbf:
      return "rbf";
  }
  return "?";
}

void KernelSpec::validate() const {
  if (kind == KernelKind::rbf && !(length_scale > 0.0 && std::isfinite(length_scale))) {
    throw ConfigError("rbf length scale must be positive, got " + std::to_string(length_scale));
  }
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DataError("kernel_eval: dimension mismatch " + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()));
  }
  switch (spec.kind) {
    case KernelKind::dot: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return s;
    }
    case KernelKind::cosine: {
      double s = 0.0, nx = 0.0, ny = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
      }
      return detail::safe_cosine(s, std::sqrt(nx), std::sqrt(ny));
    }
    case KernelKind::rbf: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
      }
      return std::exp(-d2 / (2.0 * spec.length_scale * spec.length_scale));
    }
  }
  return 0.0;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z) {
  if (X.cols() != Z.cols()) {
    throw DataError("kernel_matrix: dimension mismatch " + std::to_string(X.cols()) + " vs " +
                    std::to_string(Z.cols()));
  }
  switch (spec.kind) {
    case KernelKind::dot:
      return detail::inner_products(X, Z);
    case KernelKind::cosine: {
      Eigen::MatrixXd K = detail::inner_products(X, Z);
      const Eigen::VectorXd nx = X.rowwise().norm();
      const Eigen::VectorXd nz = Z.rowwise().norm();
      for (Eigen::Index j = 0; j < K.cols(); ++j)
        for (Eigen::Index i = 0; i < K.rows(); ++i) K(i, j) = detail::safe_cosine(K(i, j), nx(i), nz(j));
      return K;
    }
    case KernelKind::rbf: {
      // Exact differences: these matrices are small (training set and tests),
      // and the expanded form loses the unit diagonal for tiny length scales.
      const double scale = -0.5 / (spec.length_scale * spec.length_scale);
      Eigen::MatrixXd K(X.rows(), Z.rows());
      for (Eigen::Index j = 0; j < Z.rows(); ++j)
        for (Eigen::Index i = 0; i < X.rows(); ++i) K(i, j) = std::exp(scale * (X.row(i) - Z.row(j)).squaredNorm());
      return K;
    }
  }
  return {};
}

Eigen::VectorXd kernel_diagonal(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  switch (spec.kind) {
    case KernelKind::dot:
      return X.rowwise().squaredNorm();
    case KernelKind::cosine: {
      Eigen::VectorXd d(X.rows());
      for (Eigen::Index i = 0; i < X.rows(); ++i) d(i) = X.row(i).squaredNorm() == 0.0 ? 0.0 : 1.0;
      return d;
    }
    case KernelKind::rbf:
      return Eigen::VectorXd::Ones(X.rows());
  }
  return {};
}

}  // namespace gprllm::gpr
