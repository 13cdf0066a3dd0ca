#pragma once

// Shared row-block helpers for dense scoring and GPR prediction. Both paths go
// through the same product routines so that dense-retrieval scores and the
// posterior mean of a query-only fit see bit-identical inner products.

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>

#include "gprllm/corpus.hpp"

namespace gprllm::detail {

inline constexpr std::size_t kRowBlock = 8192;

using RowMajorFloat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rows [begin, begin+count) of an embedding matrix promoted to double.
inline Eigen::MatrixXd promote_rows(const corpus::EmbeddingMatrix& m, std::size_t begin, std::size_t count) {
  Eigen::Map<const RowMajorFloat> all(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                      static_cast<Eigen::Index>(m.dim()));
  return all.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)).cast<double>();
}

/// Inner products of every row of X with every row of Z (n x m).
inline Eigen::MatrixXd inner_products(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z) {
  return X * Z.transpose();
}

inline double safe_cosine(double dot, double norm_x, double norm_z) {
  if (norm_x == 0.0 || norm_z == 0.0) {
    return 0.0;
  }
  return dot / (norm_x * norm_z);
}

template <typename Fn>
void for_each_block(std::size_t rows, Fn&& fn) {
  for (std::size_t begin = 0; begin < rows; begin += kRowBlock) {
    fn(begin, std::min(kRowBlock, rows - begin));
  }
}

}  // namespace gprllm::detail
