#include "gprllm/pipeline.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "gprllm/error.hpp"
#include "gprllm/rng.hpp"
#include "json.hpp"

namespace gprllm::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

}  // namespace

void GprConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be a finite value >= 0");
  const auto [lo, hi] = ell_bounds;
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) throw ConfigError("ell bounds must satisfy 0 < lo < hi");
  if (!(ell_init > 0.0) || !std::isfinite(ell_init)) throw ConfigError("ell init must be > 0");
  if (kernel == gpr::KernelKind::rbf && optimize_ell && (ell_init < lo || ell_init > hi)) {
    throw ConfigError("ell init must lie within the ell bounds");
  }
}

void RunConfig::validate() const {
  sampler::SamplerConfig s = sampler;
  if (s.eta == 0) s.eta = s.budget;  // resolved to N per corpus; only the static checks apply here
  s.validate();
  judge.validate();
  gpr.validate();
  aggregation.validate();
  if (workers == 0) throw ConfigError("workers must be >= 1");
  if (synthetic_oracle != "cosine" && synthetic_oracle != "qrels") {
    throw ConfigError("unknown synthetic oracle '" + synthetic_oracle + "' (expected cosine or qrels)");
  }
  if (run_tag.empty() || run_tag.find_first_of(" \t\n") != std::string::npos) {
    throw ConfigError("run tag must be a non-empty token without whitespace");
  }
}

std::vector<std::string> RunConfig::describe() const {
  std::vector<std::string> lines;
  auto add = [&](const std::string& k, const std::string& v) { lines.push_back(k + " = " + v); };
  add("passages", passages.string());
  add("embeddings", embeddings.string());
  add("queries", queries.string());
  add("query-embeddings", query_embeddings.string());
  add("qrels", qrels.string());
  add("cache", cache.string());
  add("similarity", std::string(retrieval::to_string(similarity)));
  add("epsilon", num(sampler.epsilon));
  add("eta", sampler.eta == 0 ? std::string("all") : std::to_string(sampler.eta));
  add("budget", std::to_string(sampler.budget));
  add("seed", std::to_string(seed));
  add("judge", std::string(judge::to_string(judge.backend)));
  if (judge.backend == judge::Backend::synthetic) add("oracle", synthetic_oracle);
  add("model", judge.model_name);
  add("endpoint", judge.endpoint_url);
  add("batch-size", std::to_string(judge.batch_size));
  add("max-inflight", std::to_string(judge.max_inflight));
  add("score-scale", num(judge.score_scale));
  std::string labels;
  for (double l : judge.labels) labels += (labels.empty() ? "" : ",") + num(l);
  add("labels", labels);
  add("s-max", num(judge.s_max()));
  add("kernel", std::string(gpr::to_string(gpr.kernel)));
  add("alpha", num(gpr.alpha));
  add("ell-init", num(gpr.ell_init));
  add("ell-bounds", num(gpr.ell_bounds.first) + "," + num(gpr.ell_bounds.second));
  add("ell-opt", gpr.optimize_ell ? "true" : "false");
  add("top-t", std::to_string(aggregation.top_T));
  add("phi", std::string(ranker::to_string(aggregation.phi)));
  add("cutoff", std::to_string(aggregation.cutoff_K));
  add("gain", gain == eval::Gain::linear ? "linear" : "exp");
  add("run-tag", run_tag);
  add("strict", strict ? "true" : "false");
  return lines;
}

FitResult fit_and_score(std::span<const float> query_embedding, double s_max, const corpus::Corpus& corpus,
                        std::span<const std::uint32_t> rows, std::span<const double> targets, const GprConfig& cfg) {
  cfg.validate();
  if (rows.size() != targets.size()) throw DataError("fit_and_score: rows and targets differ in length");
  if (query_embedding.size() != corpus.dim()) {
    throw DataError("query dim " + std::to_string(query_embedding.size()) + " does not match corpus dim " +
                    std::to_string(corpus.dim()));
  }
  FitResult out;
  auto t0 = Clock::now();
  const Eigen::VectorXd q = gpr::to_vector(query_embedding);
  const Eigen::MatrixXd X = gpr::gather_rows(corpus.embeddings(), rows);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));

  gpr::KernelSpec spec{cfg.kernel, cfg.ell_init};
  if (cfg.kernel == gpr::KernelKind::rbf && cfg.optimize_ell) {
    gpr::LengthScaleOptions o;
    o.init = cfg.ell_init;
    o.bounds = cfg.ell_bounds;
    const auto ls = gpr::optimize_length_scale(q, s_max, X, y, cfg.alpha, o);
    spec.length_scale = ls.length_scale;
    out.ell_converged = ls.converged;
  }
  const gpr::GprModel model = gpr::fit(spec, cfg.alpha, q, s_max, X, y);
  out.length_scale = cfg.kernel == gpr::KernelKind::rbf ? spec.length_scale : 0.0;
  out.log_marginal_likelihood = gpr::log_marginal_likelihood(model);
  out.jitter_steps = model.jitter_steps;
  out.fit_seconds = seconds_since(t0);

  t0 = Clock::now();
  out.mean = gpr::predict_mean(model, corpus.embeddings());
  out.score_seconds = seconds_since(t0);
  return out;
}

QueryResult process_query(const corpus::Query& query, const corpus::Corpus& corpus, judge::Judge& judge,
                          const RunConfig& cfg) {
  const auto t_start = Clock::now();
  QueryResult result;
  auto& tr = result.trace;
  tr.query_id = query.query_id;

  auto t0 = Clock::now();
  const auto ranking = retrieval::rank(query.embedding, corpus.embeddings(), cfg.similarity);
  tr.seconds.retrieve = seconds_since(t0);

  t0 = Clock::now();
  sampler::SamplerConfig sc = cfg.sampler;
  if (sc.eta == 0) sc.eta = corpus.passage_count();
  sc.seed = derive_seed(cfg.seed, query.query_id);
  const auto sample = sampler::epsilon_greedy_sample(ranking, sc);
  const auto rows = sample.all();
  tr.greedy = sample.greedy.size();
  tr.exploratory = sample.exploratory.size();
  tr.seconds.sample = seconds_since(t0);

  t0 = Clock::now();
  auto judged = judge.judge_passages(query, rows, corpus);
  tr.judge_calls = judged.backend_calls;
  tr.cache_hits = judged.cache_hits;
  tr.seconds.judge = seconds_since(t0);

  std::vector<std::uint32_t> train_rows;
  std::vector<double> targets;
  for (const auto& j : judged.judgments) {
    train_rows.push_back(j.passage_row);
    targets.push_back(j.score);
  }
  const auto fitted = fit_and_score(query.embedding, cfg.judge.s_max(), corpus, train_rows, targets, cfg.gpr);
  tr.length_scale = fitted.length_scale;
  tr.log_marginal_likelihood = fitted.log_marginal_likelihood;
  tr.ell_converged = fitted.ell_converged;
  tr.jitter_steps = fitted.jitter_steps;
  tr.seconds.fit = fitted.fit_seconds;
  tr.seconds.score = fitted.score_seconds;

  t0 = Clock::now();
  const auto items = ranker::aggregate_items(std::span<const double>(fitted.mean.data(), fitted.mean.size()), corpus,
                                             cfg.aggregation);
  result.ranking = ranker::rank_items(query.query_id, items, cfg.aggregation);
  tr.seconds.aggregate = seconds_since(t0);
  tr.seconds.total = seconds_since(t_start);
  return result;
}

PipelineResult run_queries(const RunConfig& cfg, const corpus::Corpus& corpus, std::span<const corpus::Query> queries,
                           judge::Judge& judge, const corpus::Qrels* qrels) {
  cfg.validate();
  std::vector<std::optional<QueryResult>> slots(queries.size());
  std::vector<QueryTrace> failed(queries.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= queries.size()) return;
      try {
        slots[i] = process_query(queries[i], corpus, judge, cfg);
      } catch (const std::exception& e) {
        failed[i].query_id = queries[i].query_id;
        failed[i].ok = false;
        failed[i].error = e.what();
        if (const auto* ge = dynamic_cast<const Error*>(&e)) failed[i].error_kind = ge->kind();
        if (cfg.strict) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          stop = true;
        }
      }
    }
  };
  const std::size_t width = std::min(cfg.workers, std::max<std::size_t>(1, queries.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < width; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  PipelineResult out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (slots[i]) {
      out.judge_calls += slots[i]->trace.judge_calls;
      out.traces.push_back(slots[i]->trace);
      out.runs.push_back(std::move(slots[i]->ranking));
    } else {
      ++out.failures;
      out.traces.push_back(failed[i]);
    }
  }
  if (qrels) {
    const auto metrics = eval::default_metrics();
    out.metrics = eval::evaluate(out.runs, *qrels, metrics, cfg.gain);
  }
  return out;
}

void write_trace_jsonl(std::ostream& out, std::span<const QueryTrace> traces) {
  for (const auto& t : traces) {
    nlohmann::ordered_json rec;
    rec["query_id"] = t.query_id;
    rec["ok"] = t.ok;
    if (!t.ok) {
      rec["error"] = t.error;
    } else {
      rec["greedy"] = t.greedy;
      rec["exploratory"] = t.exploratory;
      rec["judge_calls"] = t.judge_calls;
      rec["cache_hits"] = t.cache_hits;
      rec["length_scale"] = t.length_scale;
      rec["log_marginal_likelihood"] = t.log_marginal_likelihood;
      rec["ell_converged"] = t.ell_converged;
      rec["jitter_steps"] = t.jitter_steps;
      rec["seconds"] = {{"retrieve", t.seconds.retrieve}, {"sample", t.seconds.sample},
                        {"judge", t.seconds.judge},       {"fit", t.seconds.fit},
                        {"score", t.seconds.score},       {"aggregate", t.seconds.aggregate},
                        {"total", t.seconds.total}};
    }
    out << rec.dump() << '\n';
  }
}

void write_run(std::ostream& out, const RunConfig& cfg, std::span<const ranker::RankedList> runs) {
  std::vector<std::string> header{"gprllm run"};
  for (auto& line : cfg.describe()) header.push_back(std::move(line));
  ranker::write_trec_run(out, runs, cfg.run_tag, header);
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  const auto corpus = corpus::load_corpus(cfg.passages, cfg.embeddings);
  const auto queries = corpus::load_queries(cfg.queries, cfg.query_embeddings, corpus.dim());
  std::optional<corpus::Qrels> qrels;
  if (!cfg.qrels.empty()) qrels = corpus::load_qrels(cfg.qrels);

  std::shared_ptr<judge::JudgmentCache> cache;
  if (!cfg.cache.empty()) {
    cache = std::make_shared<judge::JudgmentCache>(cfg.cache);
  } else if (cfg.judge.backend == judge::Backend::cache_only) {
    throw ConfigError("cache-only judging needs --cache");
  }
  judge::Oracle oracle;
  if (cfg.judge.backend == judge::Backend::synthetic && cfg.synthetic_oracle == "qrels") {
    if (!qrels) throw ConfigError("the qrels oracle needs --qrels");
    oracle = judge::qrels_oracle(corpus, *qrels, cfg.judge.labels.back());
  }
  judge::Judge judge(cfg.judge, judge::make_backend(cfg.judge, corpus, std::move(oracle)), cache);

  auto result = run_queries(cfg, corpus, queries, judge, qrels ? &*qrels : nullptr);

  if (!cfg.run_out.empty()) {
    auto out = open_output(cfg.run_out);
    write_run(out, cfg, result.runs);
  }
  if (!cfg.trace_out.empty()) {
    auto out = open_output(cfg.trace_out);
    write_trace_jsonl(out, result.traces);
  }
  if (!cfg.metrics_out.empty() && result.metrics) {
    auto out = open_output(cfg.metrics_out);
    eval::write_metric_jsonl(out, *result.metrics);
  }
  return result;
}

}  // namespace gprllm::pipeline
