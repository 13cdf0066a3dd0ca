#pragma once

// Precision and NDCG against graded qrels, per-query reports and paired
// significance tests between runs.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gprllm/corpus.hpp"
#include "gprllm/ranker.hpp"

namespace gprllm::eval {

enum class Gain { linear, exp };  // g or 2^g - 1

Gain parse_gain(std::string_view name);

/// |{grade > 0} in top k| / k; the denominator stays k for short lists.
double precision_at_k(const ranker::RankedList& run, const corpus::Qrels& qrels, std::size_t k);

/// DCG@k / IDCG@k with discount log2(rank + 1); 0 when IDCG is 0.
double ndcg_at_k(const ranker::RankedList& run, const corpus::Qrels& qrels, std::size_t k,
                 Gain gain = Gain::linear);

enum class MetricKind { precision, ndcg };

struct MetricSpec {
  MetricKind kind = MetricKind::ndcg;
  std::size_t k = 10;

  std::string name() const;  // "P@10", "NDCG@30"
};

/// Parses "P@10", "ndcg@30" and the like.
MetricSpec parse_metric(std::string_view text);

/// P@10, P@30, NDCG@10, NDCG@30.
std::vector<MetricSpec> default_metrics();

struct QueryMetrics {
  std::string query_id;
  std::vector<double> values;  // aligned with MetricReport::metrics
};

struct MetricReport {
  std::vector<MetricSpec> metrics;
  std::vector<QueryMetrics> per_query;  // run order
  std::vector<double> means;
  std::vector<std::string> warnings;

  std::size_t query_count() const noexcept { return per_query.size(); }
  /// Per-query values of metric m keyed by query id.
  std::map<std::string, double> column(std::size_t m) const;
};

/// Evaluates every query present in the runs. Queries without qrels score 0
/// and add a warning.
MetricReport evaluate(std::span<const ranker::RankedList> runs, const corpus::Qrels& qrels,
                      std::span<const MetricSpec> metrics, Gain gain = Gain::linear);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  std::size_t n = 0;
};

/// Paired t-test on a - b with n - 1 degrees of freedom. All-zero differences
/// give t = 0, p = 1; constant non-zero differences give p = 0.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct MetricComparison {
  std::string metric;
  double mean_a = 0.0;
  double mean_b = 0.0;
  TTestResult test;
};

/// Per-metric paired tests over the queries both reports share.
std::vector<MetricComparison> compare(const MetricReport& a, const MetricReport& b);

void write_metric_table(std::ostream& out, const MetricReport& report);
/// One JSON object per query plus a final {"query_id": "all", ...} line.
void write_metric_jsonl(std::ostream& out, const MetricReport& report);
void write_comparison_table(std::ostream& out, std::span<const MetricComparison> rows);

}  // namespace gprllm::eval
