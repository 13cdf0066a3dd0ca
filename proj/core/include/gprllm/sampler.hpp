#pragma once

// Epsilon-greedy selection of the passages sent to the relevance judge.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gprllm/dense_retrieval.hpp"

namespace gprllm::sampler {

struct SamplerConfig {
  double epsilon = 0.0;      // exploration fraction in [0, 1]
  std::size_t eta = 100;     // exploration cap: draw only from the top-eta DR rows (a.k.a. tau)
  std::size_t budget = 10;   // R, number of judged passages
  std::uint64_t seed = 0;

  /// Throws ConfigError unless 0 <= epsilon <= 1, budget >= 1 and eta >= budget.
  void validate() const;
};

/// floor((1 - epsilon) * R), robust to the binary rounding of epsilon.
std::size_t greedy_count(double epsilon, std::size_t budget);
/// R - greedy_count == ceil(epsilon * R).
std::size_t exploratory_count(double epsilon, std::size_t budget);

struct SampleSet {
  std::vector<std::uint32_t> greedy;       // DR order
  std::vector<std::uint32_t> exploratory;  // draw order

  std::vector<std::uint32_t> all() const;
  std::size_t size() const noexcept { return greedy.size() + exploratory.size(); }
};

/// Greedy part is the DR prefix; the exploratory part is drawn uniformly
/// without replacement from ranking.order[greedy, eta). Throws ConfigError
/// when eta exceeds N or the exploration pool is too small.
SampleSet epsilon_greedy_sample(const retrieval::DenseRanking& ranking, const SamplerConfig& cfg);

}  // namespace gprllm::sampler
