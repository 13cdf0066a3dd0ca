#include "gprllm/dense_retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "block_ops.hpp"
#include "gprllm/error.hpp"

namespace gprllm::retrieval {

Similarity parse_similarity(std::string_view name) {
  if (name == "dot") return Similarity::dot;
  if (name == "cosine" || name == "cos") return Similarity::cosine;
  throw ConfigError("unknown similarity '" + std::string(name) + "' (expected dot or cosine)");
}

std::string_view to_string(Similarity s) noexcept {
  return s == Similarity::dot ? "dot" : "cosine";
}

std::vector<double> score_all(std::span<const float> query, const corpus::EmbeddingMatrix& embeddings,
                              Similarity similarity) {
  if (!embeddings.empty() && query.size() != embeddings.dim()) {
    throw DataError("query dim " + std::to_string(query.size()) + " does not match embedding dim " +
                    std::to_string(embeddings.dim()));
  }
  const Eigen::MatrixXd q =
      Eigen::Map<const Eigen::RowVectorXf>(query.data(), static_cast<Eigen::Index>(query.size()))
          .cast<double>();
  const double q_norm = q.norm();

  std::vector<double> scores(embeddings.rows());
  detail::for_each_block(embeddings.rows(), [&](std::size_t begin, std::size_t count) {
    const Eigen::MatrixXd block = detail::promote_rows(embeddings, begin, count);
    const Eigen::MatrixXd dots = detail::inner_products(block, q);
    if (similarity == Similarity::dot) {
      for (std::size_t i = 0; i < count; ++i) scores[begin + i] = dots(static_cast<Eigen::Index>(i), 0);
    } else {
      const Eigen::VectorXd norms = block.rowwise().norm();
      for (std::size_t i = 0; i < count; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        scores[begin + i] = detail::safe_cosine(dots(r, 0), norms(r), q_norm);
      }
    }
  });
  return scores;
}

std::vector<std::uint32_t> descending_order(std::span<const double> scores) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

DenseRanking make_ranking(std::vector<double> scores, Similarity similarity) {
  DenseRanking ranking;
  ranking.order = descending_order(scores);
  ranking.scores = std::move(scores);
  ranking.similarity = similarity;
  return ranking;
}

DenseRanking rank(std::span<const float> query, const corpus::EmbeddingMatrix& embeddings,
                  Similarity similarity) {
  return make_ranking(score_all(query, embeddings, similarity), similarity);
}

std::vector<ScoredRow> top_k(const DenseRanking& ranking, std::size_t k) {
  const std::size_t n = std::min(k, ranking.order.size());
  std::vector<ScoredRow> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = ranking.order[i];
    out.push_back({row, ranking.scores[row]});
  }
  return out;
}

}  // namespace gprllm::retrieval
