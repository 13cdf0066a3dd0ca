#include "gprllm/sampler.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "gprllm/error.hpp"
#include "gprllm/rng.hpp"

namespace gprllm::sampler {

namespace {
// epsilon is a decimal written in binary: (1 - 0.3) * 10 evaluates to
// 6.9999999999999996, which must still floor to 7.
constexpr double kRoundingSlack = 1e-9;
}  // namespace

void SamplerConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ConfigError("epsilon must lie in [0, 1], got " + std::to_string(epsilon));
  }
  if (budget < 1) {
    throw ConfigError("budget must be at least 1");
  }
  if (eta < budget) {
    throw ConfigError("eta (" + std::to_string(eta) + ") must be >= budget (" + std::to_string(budget) + ")");
  }
}

std::size_t greedy_count(double epsilon, std::size_t budget) {
  const double g = std::floor((1.0 - epsilon) * static_cast<double>(budget) + kRoundingSlack);
  return static_cast<std::size_t>(std::max(0.0, g));
}

std::size_t exploratory_count(double epsilon, std::size_t budget) {
  return budget - greedy_count(epsilon, budget);
}

std::vector<std::uint32_t> SampleSet::all() const {
  std::vector<std::uint32_t> out(greedy);
  out.insert(out.end(), exploratory.begin(), exploratory.end());
  return out;
}

SampleSet epsilon_greedy_sample(const retrieval::DenseRanking& ranking, const SamplerConfig& cfg) {
  cfg.validate();
  const std::size_t n = ranking.order.size();
  if (cfg.eta > n) {
    throw ConfigError("eta (" + std::to_string(cfg.eta) + ") exceeds passage count (" + std::to_string(n) + ")");
  }
  const std::size_t n_greedy = greedy_count(cfg.epsilon, cfg.budget);
  const std::size_t n_explore = cfg.budget - n_greedy;
  const std::size_t pool = cfg.eta - n_greedy;
  if (n_explore > pool) {
    throw ConfigError("exploration pool too small: need " + std::to_string(n_explore) + " rows from top-" +
                      std::to_string(cfg.eta) + " minus " + std::to_string(n_greedy) + " greedy rows");
  }

  SampleSet out;
  out.greedy.assign(ranking.order.begin(), ranking.order.begin() + static_cast<std::ptrdiff_t>(n_greedy));

  // Partial Fisher-Yates over pool positions; greedy rows are the DR prefix,
  // so the pool is exactly ranking.order[n_greedy, eta).
  std::vector<std::uint32_t> positions(pool);
  std::iota(positions.begin(), positions.end(), 0u);
  CounterRng rng(cfg.seed);
  out.exploratory.reserve(n_explore);
  for (std::size_t i = 0; i < n_explore; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool - i));
    std::swap(positions[i], positions[j]);
    out.exploratory.push_back(ranking.order[n_greedy + positions[i]]);
  }
  return out;
}

}  // namespace gprllm::sampler
