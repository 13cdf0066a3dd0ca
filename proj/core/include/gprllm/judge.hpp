#pragma once

// Relevance judging: prompt rendering, expected relevance from label logits,
// a persistent judgment cache and pluggable backends (remote chat endpoint,
// cache only, synthetic oracle).

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gprllm/corpus.hpp"

namespace gprllm::judge {

enum class Backend { remote, cache_only, synthetic };
enum class Source { logprob, parsed_label, synthetic, cache };

Backend parse_backend(std::string_view name);  // remote | cache | synthetic
std::string_view to_string(Backend b) noexcept;
Source parse_source(std::string_view name);
std::string_view to_string(Source s) noexcept;

struct JudgeConfig {
  Backend backend = Backend::synthetic;
  std::string endpoint_url;  // e.g. http://localhost:8000/v1/chat/completions
  std::string api_key;
  std::string model_name = "synthetic";
  std::vector<double> labels{0.0, 1.0, 2.0, 3.0};
  std::size_t max_inflight = 4;
  double score_scale = 1.0;
  std::size_t batch_size = 10;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{250};
  int top_logprobs = 10;
  double timeout_seconds = 60.0;

  std::size_t levels() const noexcept { return labels.size(); }
  /// score_scale * largest label.
  double s_max() const;
  /// Throws ConfigError on an empty or non-increasing label list, a
  /// non-positive scale, batch size or inflight cap.
  void validate() const;
};

struct Judgment {
  std::uint32_t passage_row = 0;
  double score = 0.0;
  Source source = Source::synthetic;
};

/// Renders the graded relevance prompt. Passages are listed as "[i] text"
/// with i starting at 0. Throws ConfigError on an empty passage list.
std::string build_prompt(std::string_view query_text, std::span<const std::string_view> passage_texts);

/// Hash of the single-passage prompt; identifies a judgment independently of
/// how passages were batched.
std::uint64_t prompt_hash(std::string_view query_text, std::string_view passage_text);

/// softmax(logits) . labels, stabilised by subtracting the max logit.
/// Throws DataError on non-finite logits or a size mismatch, ConfigError if
/// fewer than two levels are given.
double expected_relevance(std::span<const double> logits, std::span<const double> labels);

std::vector<Judgment> apply_scale(std::vector<Judgment> judgments, double score_scale);

/// Scores as produced by a backend, before score_scale is applied.
struct RawJudgment {
  double score = 0.0;
  Source source = Source::synthetic;
};

/// Append-only JSON-lines judgment store. Scores are stored unscaled so one
/// cache serves every score_scale. Safe for concurrent use.
class JudgmentCache {
 public:
  struct Key {
    std::string model;
    std::string query_id;
    std::string passage_id;
    std::uint64_t prompt_hash = 0;
  };

  /// In-memory cache with no backing file.
  JudgmentCache() = default;
  /// Loads existing records from path (if present) and appends new ones to
  /// it. Malformed lines raise DataError naming the line.
  explicit JudgmentCache(const std::filesystem::path& path);

  std::optional<RawJudgment> lookup(const Key& key) const;
  /// Records a judgment and writes it through to the file, flushed.
  void insert(const Key& key, const RawJudgment& value);
  std::size_t size() const;

 private:
  static std::string flat_key(const Key& key);

  mutable std::mutex mutex_;
  std::unordered_map<std::string, RawJudgment> entries_;
  std::ofstream out_;
};

/// One request worth of passages for a backend.
struct BatchRequest {
  const corpus::Query* query = nullptr;
  std::vector<std::uint32_t> rows;
  std::vector<std::string_view> texts;
};

class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  /// One raw judgment per requested row, in request order.
  virtual std::vector<RawJudgment> judge_batch(const BatchRequest& request) = 0;
};

/// Oracle over (query, row) returning an unscaled score within the label range.
using Oracle = std::function<double(const corpus::Query&, std::uint32_t row)>;

/// 3 * max(0, cos(v_row, v_q)); needs the corpus embeddings.
Oracle cosine_oracle(const corpus::Corpus& corpus, double top_label = 3.0);
/// Grade of the passage's item in the qrels, capped at top_label; 0 when
/// unjudged.
Oracle qrels_oracle(const corpus::Corpus& corpus, corpus::Qrels qrels, double top_label = 3.0);

class SyntheticJudge final : public JudgeBackend {
 public:
  SyntheticJudge(Oracle oracle, std::vector<double> labels);
  std::vector<RawJudgment> judge_batch(const BatchRequest& request) override;

 private:
  Oracle oracle_;
  std::vector<double> labels_;
};

/// Chat-completions client requesting token logprobs. Concurrency across all
/// callers is capped at cfg.max_inflight.
class RemoteJudge final : public JudgeBackend {
 public:
  explicit RemoteJudge(const JudgeConfig& cfg);
  ~RemoteJudge() override;
  std::vector<RawJudgment> judge_batch(const BatchRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Parses a chat-completions response body into per-passage raw judgments for
/// a batch of n passages. Uses the logprobs of the label tokens when present,
/// otherwise the integer label from the JSON map. Throws JudgeError when the
/// response cannot be interpreted.
std::vector<RawJudgment> parse_completion(std::string_view body, std::size_t n, std::span<const double> labels);

struct JudgeOutcome {
  std::vector<Judgment> judgments;  // sorted by passage_row
  std::size_t backend_calls = 0;    // passages sent to the backend
  std::size_t cache_hits = 0;
};

/// Cache-first judging front end shared by all pipeline workers.
class Judge {
 public:
  /// backend may be null only for Backend::cache_only. cache may be null.
  Judge(JudgeConfig cfg, std::shared_ptr<JudgeBackend> backend, std::shared_ptr<JudgmentCache> cache);

  /// One judgment per row (duplicates collapsed). Fresh judgments are written
  /// through to the cache. A miss under cache_only raises JudgeError.
  JudgeOutcome judge_passages(const corpus::Query& query, std::span<const std::uint32_t> rows,
                              const corpus::Corpus& corpus);

  const JudgeConfig& config() const noexcept { return cfg_; }
  /// Passages sent to the backend over this judge's lifetime.
  std::size_t total_backend_calls() const noexcept { return calls_.load(); }

 private:
  JudgeConfig cfg_;
  std::shared_ptr<JudgeBackend> backend_;
  std::shared_ptr<JudgmentCache> cache_;
  std::atomic<std::size_t> calls_{0};
};

/// Builds the backend named by cfg.backend (null for cache_only). The
/// synthetic backend uses the cosine oracle unless one is given.
std::shared_ptr<JudgeBackend> make_backend(const JudgeConfig& cfg, const corpus::Corpus& corpus,
                                           Oracle oracle = {});

}  // namespace gprllm::judge
