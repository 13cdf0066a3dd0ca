#include <algorithm>
#include <cmath>
#include <string>

#include "gprllm/error.hpp"
#include "gprllm/judge.hpp"

namespace gprllm::judge {

Oracle cosine_oracle(const corpus::Corpus& corpus, double top_label) {
  const corpus::EmbeddingMatrix* emb = &corpus.embeddings();
  return [emb, top_label](const corpus::Query& q, std::uint32_t row) {
    const auto v = emb->row(row);
    if (v.size() != q.embedding.size()) throw DataError("oracle: query and passage dims differ");
    double dot = 0.0, nv = 0.0, nq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      dot += static_cast<double>(v[i]) * q.embedding[i];
      nv += static_cast<double>(v[i]) * v[i];
      nq += static_cast<double>(q.embedding[i]) * q.embedding[i];
    }
    if (nv == 0.0 || nq == 0.0) return 0.0;
    return top_label * std::clamp(dot / std::sqrt(nv * nq), 0.0, 1.0);
  };
}

Oracle qrels_oracle(const corpus::Corpus& corpus, corpus::Qrels qrels, double top_label) {
  const corpus::Corpus* c = &corpus;
  return [c, qrels = std::move(qrels), top_label](const corpus::Query& q, std::uint32_t row) {
    auto it = qrels.find(q.query_id);
    if (it == qrels.end()) return 0.0;
    auto g = it->second.find(c->passage(row).item_id);
    return g == it->second.end() ? 0.0 : std::min(top_label, static_cast<double>(g->second));
  };
}

SyntheticJudge::SyntheticJudge(Oracle oracle, std::vector<double> labels)
    : oracle_(std::move(oracle)), labels_(std::move(labels)) {
  if (!oracle_) throw ConfigError("synthetic judge needs an oracle");
  if (labels_.size() < 2) throw ConfigError("synthetic judge needs at least two labels");
}

std::vector<RawJudgment> SyntheticJudge::judge_batch(const BatchRequest& request) {
  std::vector<RawJudgment> out;
  out.reserve(request.rows.size());
  for (std::uint32_t row : request.rows) {
    const double s = oracle_(*request.query, row);
    if (!std::isfinite(s) || s < labels_.front() || s > labels_.back()) {
      throw DataError("synthetic oracle score " + std::to_string(s) + " for row " + std::to_string(row) +
                      " is outside the label range");
    }
    out.push_back({s, Source::synthetic});
  }
  return out;
}

Judge::Judge(JudgeConfig cfg, std::shared_ptr<JudgeBackend> backend, std::shared_ptr<JudgmentCache> cache)
    : cfg_(std::move(cfg)), backend_(std::move(backend)), cache_(std::move(cache)) {
  cfg_.validate();
  if (!backend_ && cfg_.backend != Backend::cache_only) {
    throw ConfigError("judge backend '" + std::string(to_string(cfg_.backend)) + "' was not constructed");
  }
  if (cfg_.backend == Backend::cache_only && !cache_) {
    throw ConfigError("cache-only judging needs a judgment cache");
  }
}

JudgeOutcome Judge::judge_passages(const corpus::Query& query, std::span<const std::uint32_t> rows,
                                   const corpus::Corpus& corpus) {
  std::vector<std::uint32_t> unique(rows.begin(), rows.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  JudgeOutcome outcome;
  outcome.judgments.reserve(unique.size());
  std::vector<std::uint32_t> misses;
  std::vector<JudgmentCache::Key> miss_keys;
  for (std::uint32_t row : unique) {
    if (row >= corpus.passage_count()) {
      throw DataError("judge: row " + std::to_string(row) + " out of range");
    }
    const auto& p = corpus.passage(row);
    JudgmentCache::Key key{cfg_.model_name, query.query_id, p.passage_id, prompt_hash(query.text, p.text)};
    if (cache_) {
      if (auto hit = cache_->lookup(key)) {
        outcome.judgments.push_back({row, cfg_.score_scale * hit->score, Source::cache});
        ++outcome.cache_hits;
        continue;
      }
    }
    if (cfg_.backend == Backend::cache_only) {
      throw JudgeError("judgment cache miss for query '" + query.query_id + "' passage '" + p.passage_id +
                       "' under cache-only judging");
    }
    misses.push_back(row);
    miss_keys.push_back(std::move(key));
  }

  for (std::size_t begin = 0; begin < misses.size(); begin += cfg_.batch_size) {
    const std::size_t end = std::min(misses.size(), begin + cfg_.batch_size);
    BatchRequest req;
    req.query = &query;
    for (std::size_t i = begin; i < end; ++i) {
      req.rows.push_back(misses[i]);
      req.texts.push_back(corpus.passage(misses[i]).text);
    }
    calls_ += req.rows.size();
    outcome.backend_calls += req.rows.size();
    const auto raw = backend_->judge_batch(req);
    if (raw.size() != req.rows.size()) {
      throw JudgeError("judge backend returned " + std::to_string(raw.size()) + " judgments for " +
                       std::to_string(req.rows.size()) + " passages");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double s = raw[i].score;
      if (!std::isfinite(s) || s < cfg_.labels.front() || s > cfg_.labels.back()) {
        throw JudgeError("judge score " + std::to_string(s) + " outside the label range");
      }
      if (cache_) cache_->insert(miss_keys[begin + i], raw[i]);
      outcome.judgments.push_back({req.rows[i], cfg_.score_scale * s, raw[i].source});
    }
  }

  std::sort(outcome.judgments.begin(), outcome.judgments.end(),
            [](const Judgment& a, const Judgment& b) { return a.passage_row < b.passage_row; });
  return outcome;
}

std::shared_ptr<JudgeBackend> make_backend(const JudgeConfig& cfg, const corpus::Corpus& corpus, Oracle oracle) {
  switch (cfg.backend) {
    case Backend::synthetic:
      return std::make_shared<SyntheticJudge>(oracle ? std::move(oracle) : cosine_oracle(corpus, cfg.labels.back()),
                                              cfg.labels);
    case Backend::remote:
      return std::make_shared<RemoteJudge>(cfg);
    case Backend::cache_only:
      return nullptr;
  }
  return nullptr;
}

}  // namespace gprllm::judge
