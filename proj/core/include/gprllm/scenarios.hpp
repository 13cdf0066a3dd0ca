#pragma once

// Benchmark scenarios run by `gprllm bench` and the acceptance checks.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gprllm/pipeline.hpp"

namespace gprllm::scenarios {

enum class Scenario { latency, multimodal, augmentation, sensitivity };
Scenario parse_scenario(std::string_view name);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);
/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct LatencyOptions {
  std::size_t passages = 100000;
  std::size_t dim = 384;
  std::size_t budget = 50;
  double epsilon = 0.3;
  std::size_t repeats = 3;
  gpr::KernelKind kernel = gpr::KernelKind::rbf;
  std::uint64_t seed = 1;
};

struct LatencyReport {
  LatencyOptions options;
  pipeline::StageTimings median;  // per stage, median over repeats
  std::vector<pipeline::StageTimings> runs;

  double non_judge_seconds() const noexcept { return median.total - median.judge; }
};

LatencyReport run_latency(const LatencyOptions& opts);
void print(std::ostream& out, const LatencyReport& report);

struct ScalingReport {
  std::vector<double> passages;
  std::vector<double> seconds;  // best of repeats, posterior mean over all passages
  double slope = 0.0;
};

/// Times posterior-mean scoring of N passages for a fitted RBF model with
/// budget training rows.
ScalingReport run_scaling(std::span<const std::size_t> sizes, std::size_t dim, std::size_t budget,
                          std::size_t repeats, std::uint64_t seed);
void print(std::ostream& out, const ScalingReport& report);

inline constexpr std::array<std::string_view, 4> kMethodNames = {"dr", "dot", "cosine", "rbf"};

struct MultimodalReport {
  std::vector<std::array<double, 4>> per_seed;  // NDCG@10 in kMethodNames order
  std::array<double, 4> mean{};
};

/// Two-cluster surface: R = 50, epsilon = 0.3, exploration over all
/// passages, top-3 mean aggregation.
MultimodalReport run_multimodal(std::size_t seeds);
void print(std::ostream& out, const MultimodalReport& report);

inline constexpr std::array<std::string_view, 3> kKernelNames = {"dot", "cosine", "rbf"};

struct AugmentationReport {
  std::size_t queries = 0;
  std::size_t base = 100;
  // [kernel][k] mean NDCG@10 after adding k labels, k = 0..20
  std::array<std::vector<double>, 3> high;
  std::array<std::vector<double>, 3> low;
  std::array<double, 3> rho_high{};       // Spearman over k = 1..20
  std::array<double, 3> max_delta_high{};  // max_k |NDCG(k) - NDCG(0)|
  std::array<double, 3> max_delta_low{};
};

/// Greedy top-100 base plus 1..20 planted high-relevance (or background)
/// labels, averaged over seeded queries.
AugmentationReport run_augmentation(std::size_t queries);
void print(std::ostream& out, const AugmentationReport& report);

struct SensitivityRow {
  std::string parameter;
  std::string value;
  double ndcg10 = 0.0;
};

/// RBF NDCG@10 on the two-cluster surface over alpha, fixed ell, score
/// scale, top-T and phi grids, one parameter varied at a time.
std::vector<SensitivityRow> run_sensitivity(std::size_t seeds);
void print(std::ostream& out, std::span<const SensitivityRow> rows);

}  // namespace gprllm::scenarios
