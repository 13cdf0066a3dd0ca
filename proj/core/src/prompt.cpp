#include <algorithm>
#include <cmath>
#include <string>

#include "gprllm/error.hpp"
#include "gprllm/judge.hpp"
#include "gprllm/rng.hpp"

namespace gprllm::judge {

namespace {

constexpr std::string_view kPromptHead =
    "Given a query and a list of passages, assign each passage a relevance score from 0 to 3:\n"
    "\n"
    "0 = Unrelated to the query.\n"
    "1 = Related but does not answer the query.\n"
    "2 = Partially answers the query but is unclear or mixed with extra information.\n"
    "3 = Fully dedicated to answering the query.\n"
    "\n"
    "Instructions:\n"
    "- Assign 1 if the passage is somewhat related but incomplete.\n"
    "- Assign 2 if it provides key information but includes unrelated content.\n"
    "- Assign 3 if it solely and fully addresses the query.\n"
    "- Otherwise, assign 0.\n"
    "\n"
    "Query: ";

constexpr std::string_view kPromptPassages = "\nPassages: ";

constexpr std::string_view kPromptTail =
    "\n"
    "\n"
    "Steps:\n"
    "1. Analyze the search intent.\n"
    "2. Measure content alignment (M).\n"
    "3. Assess passage trustworthiness (T).\n"
    "4. Decide on the final score (O).\n"
    "\n"
    "Return a JSON object mapping passage indices (starting from 0) to relevance scores. "
    "Do not include any code in your response.\n";

}  // namespace

Backend parse_backend(std::string_view name) {
  if (name == "remote") return Backend::remote;
  if (name == "cache" || name == "cache_only") return Backend::cache_only;
  if (name == "synthetic") return Backend::synthetic;
  throw ConfigError("unknown judge backend '" + std::string(name) + "' (expected remote, cache or synthetic)");
}

std::string_view to_string(Backend b) noexcept {
  switch (b) {
    case Backend::remote:
      return "remote";
    case Backend::cache_only:
      return "cache";
    case Backend::synthetic:
      return "synthetic";
  }
  return "?";
}

Source parse_source(std::string_view name) {
  if (name == "logprob") return Source::logprob;
  if (name == "parsed_label") return Source::parsed_label;
  if (name == "synthetic") return Source::synthetic;
  if (name == "cache") return Source::cache;
  throw DataError("unknown judgment source '" + std::string(name) + "'");
}

std::string_view to_string(Source s) noexcept {
  switch (s) {
    case Source::logprob:
      return "logprob";
    case Source::parsed_label:
      return "parsed_label";
    case Source::synthetic:
      return "synthetic";
    case Source::cache:
      return "cache";
  }
  return "?";
}

double JudgeConfig::s_max() const {
  if (labels.empty()) throw ConfigError("judge labels are empty");
  return score_scale * labels.back();
}

void JudgeConfig::validate() const {
  if (labels.size() < 2) throw ConfigError("judge needs at least two relevance labels");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(labels[i])) throw ConfigError("judge labels must be finite");
    if (i > 0 && !(labels[i] > labels[i - 1])) throw ConfigError("judge labels must be strictly increasing");
  }
  if (!(score_scale > 0.0) || !std::isfinite(score_scale)) throw ConfigError("score_scale must be > 0");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (max_inflight == 0) throw ConfigError("max_inflight must be >= 1");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (backend == Backend::remote && endpoint_url.empty()) {
    throw ConfigError("remote judge needs an endpoint URL (set GPRLLM_JUDGE_URL)");
  }
}

std::string build_prompt(std::string_view query_text, std::span<const std::string_view> passage_texts) {
  if (passage_texts.empty()) throw ConfigError("build_prompt: no passages given");
  std::string out;
  out.reserve(kPromptHead.size() + kPromptTail.size() + query_text.size() + 64 * passage_texts.size());
  out.append(kPromptHead).append(query_text).append(kPromptPassages);
  for (std::size_t i = 0; i < passage_texts.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out.append("[").append(std::to_string(i)).append("] ").append(passage_texts[i]);
  }
  out.append(kPromptTail);
  return out;
}

std::uint64_t prompt_hash(std::string_view query_text, std::string_view passage_text) {
  const std::string_view one[] = {passage_text};
  return fnv1a64(build_prompt(query_text, one));
}

double expected_relevance(std::span<const double> logits, std::span<const double> labels) {
  if (logits.size() != labels.size()) {
    throw DataError("expected_relevance: " + std::to_string(logits.size()) + " logits for " +
                    std::to_string(labels.size()) + " labels");
  }
  if (logits.size() < 2) throw ConfigError("expected_relevance needs at least two levels");
  for (double z : logits) {
    if (!std::isfinite(z)) throw DataError("expected_relevance: non-finite logit");
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double norm = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double w = std::exp(logits[k] - zmax);
    norm += w;
    acc += w * labels[k];
  }
  const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
  return std::clamp(acc / norm, *lo, *hi);
}

std::vector<Judgment> apply_scale(std::vector<Judgment> judgments, double score_scale) {
  if (!(score_scale > 0.0)) throw ConfigError("score_scale must be > 0");
  for (auto& j : judgments) j.score *= score_scale;
  return judgments;
}

}  // namespace gprllm::judge
