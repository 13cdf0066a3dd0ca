#pragma once

// Exact brute-force dense scoring and deterministic top-k selection.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gprllm/corpus.hpp"

namespace gprllm::retrieval {

enum class Similarity { dot, cosine };

Similarity parse_similarity(std::string_view name);
std::string_view to_string(Similarity s) noexcept;

/// Scores for every passage and the induced order: descending score with
/// ties broken by ascending row index.
struct DenseRanking {
  std::vector<double> scores;
  std::vector<std::uint32_t> order;
  Similarity similarity = Similarity::dot;

  std::size_t size() const noexcept { return scores.size(); }
};

struct ScoredRow {
  std::uint32_t row;
  double score;

  friend bool operator==(const ScoredRow&, const ScoredRow&) = default;
};

/// <q, v_j> or the cosine of the angle. A zero-norm vector scores 0 under
/// cosine. Throws DataError on dimension mismatch.
std::vector<double> score_all(std::span<const float> query, const corpus::EmbeddingMatrix& embeddings,
                              Similarity similarity);

/// Sorts row indices by descending score, ascending row on ties.
std::vector<std::uint32_t> descending_order(std::span<const double> scores);

DenseRanking make_ranking(std::vector<double> scores, Similarity similarity);
DenseRanking rank(std::span<const float> query, const corpus::EmbeddingMatrix& embeddings,
                  Similarity similarity);

/// First k entries of the ranking (all of them when k exceeds N).
std::vector<ScoredRow> top_k(const DenseRanking& ranking, std::size_t k);

}  // namespace gprllm::retrieval
