#pragma once

// End-to-end per-query pipeline: dense retrieval, epsilon-greedy sampling,
// judging, GPR fit, posterior scoring of every passage, item aggregation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gprllm/corpus.hpp"
#include "gprllm/dense_retrieval.hpp"
#include "gprllm/error.hpp"
#include "gprllm/eval.hpp"
#include "gprllm/gpr.hpp"
#include "gprllm/judge.hpp"
#include "gprllm/ranker.hpp"
#include "gprllm/sampler.hpp"

namespace gprllm::pipeline {

struct GprConfig {
  gpr::KernelKind kernel = gpr::KernelKind::rbf;
  double alpha = 1e-3;
  double ell_init = 1.0;
  std::pair<double, double> ell_bounds{1e-3, 1e3};
  bool optimize_ell = true;

  void validate() const;
};

struct RunConfig {
  std::filesystem::path passages;
  std::filesystem::path embeddings;
  std::filesystem::path queries;
  std::filesystem::path query_embeddings;
  std::filesystem::path qrels;         // optional
  std::filesystem::path run_out;
  std::filesystem::path trace_out;     // optional
  std::filesystem::path metrics_out;   // optional, JSON lines
  std::filesystem::path cache;         // optional judgment cache

  retrieval::Similarity similarity = retrieval::Similarity::dot;
  sampler::SamplerConfig sampler;      // eta == 0 means "all passages"
  judge::JudgeConfig judge;
  GprConfig gpr;
  ranker::AggregationConfig aggregation;
  eval::Gain gain = eval::Gain::linear;

  std::string synthetic_oracle = "cosine";  // cosine | qrels (synthetic judge only)
  std::string run_tag = "gprllm";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool strict = false;

  void validate() const;
  /// Resolved configuration as "key = value" lines (no secrets).
  std::vector<std::string> describe() const;
};

struct StageTimings {
  double retrieve = 0.0;
  double sample = 0.0;
  double judge = 0.0;
  double fit = 0.0;  // includes length-scale search
  double score = 0.0;
  double aggregate = 0.0;
  double total = 0.0;

  double stage_sum() const noexcept { return retrieve + sample + judge + fit + score + aggregate; }
};

struct QueryTrace {
  std::string query_id;
  bool ok = true;
  std::string error;
  ErrorKind error_kind = ErrorKind::data;
  std::size_t greedy = 0;
  std::size_t exploratory = 0;
  std::size_t judge_calls = 0;
  std::size_t cache_hits = 0;
  double length_scale = 0.0;
  double log_marginal_likelihood = 0.0;
  bool ell_converged = true;
  int jitter_steps = 0;
  StageTimings seconds;
};

/// Posterior scoring of all passages from a labelled set.
struct FitResult {
  Eigen::VectorXd mean;  // one per passage
  double length_scale = 0.0;
  double log_marginal_likelihood = 0.0;
  bool ell_converged = true;
  int jitter_steps = 0;
  double fit_seconds = 0.0;
  double score_seconds = 0.0;
};

/// Fits on the query row (target s_max) plus (rows, targets) and predicts
/// the posterior mean for every passage.
FitResult fit_and_score(std::span<const float> query_embedding, double s_max, const corpus::Corpus& corpus,
                        std::span<const std::uint32_t> rows, std::span<const double> targets, const GprConfig& cfg);

struct QueryResult {
  ranker::RankedList ranking;
  QueryTrace trace;
};

/// Runs every stage for one query. Throws on any stage error.
QueryResult process_query(const corpus::Query& query, const corpus::Corpus& corpus, judge::Judge& judge,
                          const RunConfig& cfg);

struct PipelineResult {
  std::vector<ranker::RankedList> runs;  // successful queries, input order
  std::vector<QueryTrace> traces;        // every query, input order
  std::optional<eval::MetricReport> metrics;
  std::size_t judge_calls = 0;
  std::size_t failures = 0;
};

/// Processes queries on cfg.workers threads. A failed query is traced and
/// skipped; with cfg.strict the first failure is rethrown after the workers
/// stop.
PipelineResult run_queries(const RunConfig& cfg, const corpus::Corpus& corpus, std::span<const corpus::Query> queries,
                           judge::Judge& judge, const corpus::Qrels* qrels);

/// Loads inputs named in cfg, runs all queries and writes the run file,
/// trace and metrics.
PipelineResult run_pipeline(const RunConfig& cfg);

void write_trace_jsonl(std::ostream& out, std::span<const QueryTrace> traces);
void write_run(std::ostream& out, const RunConfig& cfg, std::span<const ranker::RankedList> runs);

}  // namespace gprllm::pipeline
