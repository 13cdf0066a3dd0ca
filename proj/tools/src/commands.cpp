#include "commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "gprllm/error.hpp"
#include "gprllm/fixtures.hpp"
#include "gprllm/pipeline.hpp"
#include "gprllm/scenarios.hpp"
#include "json.hpp"

namespace gprllm::cli {

namespace {

// Flag values as parsed; resolved into a RunConfig once parsing is done.
struct Options {
  std::string passages, embeddings, queries, query_embeddings, qrels;
  std::string output, trace, metrics_out, cache, judgments;

  std::string similarity = "dot";
  double epsilon = 0.0;
  std::string eta = "100";
  std::size_t budget = 10;
  std::uint64_t seed = 0;

  std::string judge = "synthetic";
  std::string oracle = "cosine";
  std::string model = "synthetic";
  std::string endpoint;
  std::size_t batch_size = 10;
  std::size_t max_inflight = 4;
  double score_scale = 1.0;
  std::vector<double> labels{0, 1, 2, 3};

  std::string kernel = "rbf";
  double alpha = 1e-3;
  double ell_init = 1.0;
  std::vector<double> ell_bounds{1e-3, 1e3};
  bool no_ell_opt = false;

  std::size_t top_t = 3;
  std::string phi = "mean";
  std::size_t cutoff = 100;

  std::vector<std::string> metric;
  std::vector<std::size_t> k;
  std::string gain = "linear";

  std::string run_tag = "gprllm";
  std::size_t workers = 1;
  bool strict = false;
  std::size_t top_k = 100;

  // eval / compare
  std::string run, run_a, run_b, jsonl;

  // ingest --synthetic
  std::string synthetic_dir;
  fixtures::TopicCorpusSpec topic;

  // bench
  std::string scenario = "latency";
  std::size_t bench_passages = 100000, bench_dim = 384, bench_budget = 50, repeats = 3, seeds = 20;
};

// Parsed ahead of time by expand_config; registered so it shows in --help.
void add_config(CLI::App* app) {
  app->add_option("--config", "INI/TOML file of option = value lines; explicit flags win");
}

void add_corpus(CLI::App* app, Options& o, bool need_queries) {
  app->add_option("--passages", o.passages, "Passage records (JSON lines)")->required();
  app->add_option("--embeddings", o.embeddings, "Passage embeddings (EMB1)")->required();
  auto* q = app->add_option("--queries", o.queries, "Query records (JSON lines)");
  auto* qe = app->add_option("--query-embeddings", o.query_embeddings, "Query embeddings (EMB1)");
  if (need_queries) {
    q->required();
    qe->required();
  }
}

void add_sampler(CLI::App* app, Options& o) {
  app->add_option("--similarity", o.similarity, "Dense retrieval similarity")
      ->check(CLI::IsMember({"dot", "cosine"}))
      ->capture_default_str();
  app->add_option("--epsilon", o.epsilon, "Exploration fraction")->capture_default_str();
  app->add_option("--eta,--tau", o.eta, "Exploration pool: top-eta DR passages, or 'all'")->capture_default_str();
  app->add_option("--budget,-R", o.budget, "Judged passages per query")->capture_default_str();
  app->add_option("--seed", o.seed, "Global seed")->capture_default_str();
}

void add_judge(CLI::App* app, Options& o) {
  app->add_option("--judge", o.judge, "Judge backend")
      ->check(CLI::IsMember({"remote", "cache", "synthetic"}))
      ->capture_default_str();
  app->add_option("--oracle", o.oracle, "Synthetic judge oracle")
      ->check(CLI::IsMember({"cosine", "qrels"}))
      ->capture_default_str();
  app->add_option("--model", o.model, "Judge model name")->capture_default_str();
  app->add_option("--endpoint", o.endpoint, "Chat-completions URL")->envname("GPRLLM_JUDGE_URL");
  app->add_option("--batch-size", o.batch_size, "Passages per judge request")->capture_default_str();
  app->add_option("--max-inflight", o.max_inflight, "Concurrent judge requests")->capture_default_str();
  app->add_option("--score-scale", o.score_scale, "Multiplier applied to judge scores")->capture_default_str();
  app->add_option("--labels", o.labels, "Relevance labels, increasing")->delimiter(',')->capture_default_str();
  app->add_option("--cache", o.cache, "Judgment cache (JSON lines, appended)");
}

void add_gpr(CLI::App* app, Options& o) {
  app->add_option("--kernel", o.kernel, "GPR kernel")
      ->check(CLI::IsMember({"dot", "cosine", "rbf"}))
      ->capture_default_str();
  app->add_option("--alpha", o.alpha, "Observation noise variance")->capture_default_str();
  app->add_option("--ell-init", o.ell_init, "Initial (or fixed) RBF length scale")->capture_default_str();
  app->add_option("--ell-bounds", o.ell_bounds, "Length-scale bounds lo,hi")
      ->expected(2)
      ->delimiter(',')
      ->capture_default_str();
  app->add_flag("--no-ell-opt", o.no_ell_opt, "Keep the length scale fixed at --ell-init");
}

void add_aggregation(CLI::App* app, Options& o) {
  app->add_option("--top-t", o.top_t, "Passages aggregated per item")->capture_default_str();
  app->add_option("--phi", o.phi, "Aggregation over the top-T passages")
      ->check(CLI::IsMember({"mean", "max"}))
      ->capture_default_str();
  app->add_option("--cutoff", o.cutoff, "Items kept per query")->capture_default_str();
}

void add_metrics(CLI::App* app, Options& o) {
  app->add_option("--metric", o.metric, "Metrics: P, NDCG or NAME@k (repeatable)");
  app->add_option("--k", o.k, "Cutoffs for bare metric names")->delimiter(',');
  app->add_option("--gain", o.gain, "NDCG gain")->check(CLI::IsMember({"linear", "exp"}))->capture_default_str();
}

void add_run_output(CLI::App* app, Options& o) {
  app->add_option("--output,-o", o.output, "Run file to write")->required();
  app->add_option("--run-tag", o.run_tag, "Run tag column")->capture_default_str();
  app->add_option("--workers", o.workers, "Queries processed concurrently")->capture_default_str();
  app->add_flag("--strict", o.strict, "Abort the whole run on the first failed query");
}

std::size_t parse_eta(const std::string& text) {
  if (text == "all") return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoul(text, &used);
    if (used == text.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("--eta must be a positive count or 'all'");
}

pipeline::RunConfig resolve(const Options& o) {
  pipeline::RunConfig c;
  c.passages = o.passages;
  c.embeddings = o.embeddings;
  c.queries = o.queries;
  c.query_embeddings = o.query_embeddings;
  c.qrels = o.qrels;
  c.run_out = o.output;
  c.trace_out = o.trace;
  c.metrics_out = o.metrics_out;
  c.cache = o.cache;
  c.similarity = retrieval::parse_similarity(o.similarity);
  c.sampler.epsilon = o.epsilon;
  c.sampler.eta = parse_eta(o.eta);
  c.sampler.budget = o.budget;
  c.seed = o.seed;
  c.judge.backend = judge::parse_backend(o.judge);
  c.judge.model_name = o.model;
  c.judge.endpoint_url = o.endpoint;
  if (const char* key = std::getenv("GPRLLM_API_KEY")) c.judge.api_key = key;
  c.judge.batch_size = o.batch_size;
  c.judge.max_inflight = o.max_inflight;
  c.judge.score_scale = o.score_scale;
  c.judge.labels = o.labels;
  c.synthetic_oracle = o.oracle;
  c.gpr.kernel = gpr::parse_kernel(o.kernel);
  c.gpr.alpha = o.alpha;
  c.gpr.ell_init = o.ell_init;
  if (o.ell_bounds.size() != 2) throw ConfigError("--ell-bounds needs two values");
  c.gpr.ell_bounds = {o.ell_bounds[0], o.ell_bounds[1]};
  c.gpr.optimize_ell = !o.no_ell_opt;
  c.aggregation.top_T = o.top_t;
  c.aggregation.phi = ranker::parse_phi(o.phi);
  c.aggregation.cutoff_K = o.cutoff;
  c.gain = eval::parse_gain(o.gain);
  c.run_tag = o.run_tag;
  c.workers = o.workers;
  c.strict = o.strict;
  c.validate();
  return c;
}

std::vector<eval::MetricSpec> resolve_metrics(const Options& o) {
  if (o.metric.empty() && o.k.empty()) return eval::default_metrics();
  std::vector<std::string> names = o.metric.empty() ? std::vector<std::string>{"P", "NDCG"} : o.metric;
  std::vector<std::size_t> ks = o.k.empty() ? std::vector<std::size_t>{10, 30} : o.k;
  std::vector<eval::MetricSpec> out;
  for (const auto& n : names) {
    if (n.find('@') != std::string::npos) {
      out.push_back(eval::parse_metric(n));
    } else {
      for (auto k : ks) out.push_back(eval::parse_metric(n + "@" + std::to_string(k)));
    }
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

// Writes to the named file, or stdout when the path is empty or "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
  } else {
    auto out = open_output(path);
    fn(out);
  }
}

struct Loaded {
  corpus::Corpus corpus;
  std::vector<corpus::Query> queries;
};

Loaded load_inputs(const pipeline::RunConfig& c) {
  auto corpus = corpus::load_corpus(c.passages, c.embeddings);
  auto queries = corpus::load_queries(c.queries, c.query_embeddings, corpus.dim());
  return {std::move(corpus), std::move(queries)};
}

sampler::SampleSet sample_for(const corpus::Query& q, const corpus::Corpus& corpus, const pipeline::RunConfig& c) {
  const auto ranking = retrieval::rank(q.embedding, corpus.embeddings(), c.similarity);
  sampler::SamplerConfig sc = c.sampler;
  if (sc.eta == 0) sc.eta = corpus.passage_count();
  sc.seed = derive_seed(c.seed, q.query_id);
  return sampler::epsilon_greedy_sample(ranking, sc);
}

std::unique_ptr<judge::Judge> make_judge(const pipeline::RunConfig& c, const corpus::Corpus& corpus) {
  std::shared_ptr<judge::JudgmentCache> cache;
  if (!c.cache.empty()) cache = std::make_shared<judge::JudgmentCache>(c.cache);
  judge::Oracle oracle;
  if (c.judge.backend == judge::Backend::synthetic && c.synthetic_oracle == "qrels") {
    if (c.qrels.empty()) throw ConfigError("--oracle qrels needs --qrels");
    oracle = judge::qrels_oracle(corpus, corpus::load_qrels(c.qrels), c.judge.labels.back());
  }
  return std::make_unique<judge::Judge>(c.judge, judge::make_backend(c.judge, corpus, std::move(oracle)), cache);
}

void print_warnings(const eval::MetricReport& report) {
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
}

// ---- subcommands ---------------------------------------------------------

void cmd_ingest(const Options& o) {
  if (!o.synthetic_dir.empty()) {
    const auto data = fixtures::topic_corpus(o.topic);
    fixtures::write_dataset(data, o.synthetic_dir);
    std::cout << "wrote synthetic dataset to " << o.synthetic_dir << ": " << data.corpus.passage_count()
              << " passages, " << data.corpus.item_count() << " items, " << data.queries.size() << " queries, dim "
              << data.corpus.dim() << '\n';
    return;
  }
  if (o.passages.empty() || o.embeddings.empty()) throw ConfigError("ingest needs --passages and --embeddings, or --synthetic");
  const auto corpus = corpus::load_corpus(o.passages, o.embeddings);
  std::cout << "passages " << corpus.passage_count() << "\nitems " << corpus.item_count() << "\ndim " << corpus.dim()
            << '\n';
  std::vector<corpus::Query> queries;
  if (!o.queries.empty() || !o.query_embeddings.empty()) {
    if (o.queries.empty() || o.query_embeddings.empty()) {
      throw ConfigError("--queries and --query-embeddings go together");
    }
    queries = corpus::load_queries(o.queries, o.query_embeddings, corpus.dim());
    std::cout << "queries " << queries.size() << '\n';
  }
  if (!o.qrels.empty()) {
    const auto qrels = corpus::load_qrels(o.qrels);
    std::size_t judged = 0, unknown = 0;
    for (const auto& [qid, items] : qrels) {
      for (const auto& [item, grade] : items) {
        ++judged;
        if (!corpus.items().find(item)) ++unknown;
      }
    }
    std::cout << "qrels queries " << qrels.size() << "\nqrels judgments " << judged << '\n';
    if (unknown) std::cerr << "warning: " << unknown << " judged items are absent from the corpus\n";
    for (const auto& q : queries) {
      if (!qrels.count(q.query_id)) std::cerr << "warning: query '" << q.query_id << "' has no qrels\n";
    }
  }
}

void cmd_retrieve(const Options& o) {
  const auto c = resolve(o);
  const auto in = load_inputs(c);
  with_output(o.output, [&](std::ostream& out) {
    for (const auto& q : in.queries) {
      const auto ranking = retrieval::rank(q.embedding, in.corpus.embeddings(), c.similarity);
      std::size_t rank = 0;
      for (const auto& e : retrieval::top_k(ranking, o.top_k)) {
        out << q.query_id << " Q0 " << in.corpus.passage(e.row).passage_id << ' ' << ++rank << ' '
            << ranker::format_score(e.score) << ' ' << c.run_tag << '\n';
      }
    }
  });
}

void cmd_sample(const Options& o) {
  const auto c = resolve(o);
  const auto in = load_inputs(c);
  with_output(o.output, [&](std::ostream& out) {
    for (const auto& q : in.queries) {
      const auto s = sample_for(q, in.corpus, c);
      nlohmann::ordered_json rec;
      rec["query_id"] = q.query_id;
      auto ids = [&](const std::vector<std::uint32_t>& rows) {
        std::vector<std::string> v;
        for (auto r : rows) v.push_back(in.corpus.passage(r).passage_id);
        return v;
      };
      rec["greedy"] = ids(s.greedy);
      rec["exploratory"] = ids(s.exploratory);
      out << rec.dump() << '\n';
    }
  });
}

void cmd_judge(const Options& o) {
  const auto c = resolve(o);
  const auto in = load_inputs(c);
  auto judge = make_judge(c, in.corpus);
  std::size_t calls = 0, hits = 0;
  with_output(o.output, [&](std::ostream& out) {
    for (const auto& q : in.queries) {
      const auto rows = sample_for(q, in.corpus, c).all();
      const auto outcome = judge->judge_passages(q, rows, in.corpus);
      calls += outcome.backend_calls;
      hits += outcome.cache_hits;
      for (const auto& j : outcome.judgments) {
        nlohmann::ordered_json rec;
        rec["query_id"] = q.query_id;
        rec["passage_id"] = in.corpus.passage(j.passage_row).passage_id;
        rec["score"] = j.score;
        rec["source"] = std::string(judge::to_string(j.source));
        out << rec.dump() << '\n';
      }
    }
  });
  std::cerr << "judge calls " << calls << ", cache hits " << hits << '\n';
}

void cmd_rank(const Options& o) {
  auto c = resolve(o);
  const auto in = load_inputs(c);
  std::map<std::string, std::uint32_t> row_of;
  for (std::size_t r = 0; r < in.corpus.passage_count(); ++r) {
    row_of[in.corpus.passage(r).passage_id] = static_cast<std::uint32_t>(r);
  }
  std::map<std::string, std::pair<std::vector<std::uint32_t>, std::vector<double>>> labelled;
  std::ifstream jin(o.judgments);
  if (!jin) throw ConfigError("cannot open " + o.judgments);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(jin, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto pid = rec.at("passage_id").get<std::string>();
      auto it = row_of.find(pid);
      if (it == row_of.end()) throw DataError("unknown passage '" + pid + "'");
      auto& [rows, ys] = labelled[rec.at("query_id").get<std::string>()];
      rows.push_back(it->second);
      ys.push_back(rec.at("score").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(o.judgments + ": line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(o.judgments + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::vector<ranker::RankedList> runs;
  for (const auto& q : in.queries) {
    static const std::pair<std::vector<std::uint32_t>, std::vector<double>> none;
    auto it = labelled.find(q.query_id);
    const auto& [rows, ys] = it == labelled.end() ? none : it->second;
    const auto fit = pipeline::fit_and_score(q.embedding, c.judge.s_max(), in.corpus, rows, ys, c.gpr);
    const auto items = ranker::aggregate_items(std::span<const double>(fit.mean.data(), fit.mean.size()), in.corpus,
                                               c.aggregation);
    runs.push_back(ranker::rank_items(q.query_id, items, c.aggregation));
  }
  auto out = open_output(o.output);
  pipeline::write_run(out, c, runs);
}

void cmd_eval(const Options& o) {
  const auto runs = ranker::load_trec_run(o.run);
  const auto qrels = corpus::load_qrels(o.qrels);
  const auto metrics = resolve_metrics(o);
  const auto report = eval::evaluate(runs, qrels, metrics, eval::parse_gain(o.gain));
  print_warnings(report);
  eval::write_metric_table(std::cout, report);
  if (!o.jsonl.empty()) {
    auto out = open_output(o.jsonl);
    eval::write_metric_jsonl(out, report);
  }
}

void cmd_compare(const Options& o) {
  const auto qrels = corpus::load_qrels(o.qrels);
  const auto metrics = resolve_metrics(o);
  const auto gain = eval::parse_gain(o.gain);
  const auto ra = ranker::load_trec_run(o.run_a);
  const auto rb = ranker::load_trec_run(o.run_b);
  const auto a = eval::evaluate(ra, qrels, metrics, gain);
  const auto b = eval::evaluate(rb, qrels, metrics, gain);
  print_warnings(a);
  print_warnings(b);
  const auto rows = eval::compare(a, b);
  eval::write_comparison_table(std::cout, rows);
}

int cmd_pipeline(const Options& o) {
  const auto c = resolve(o);
  const auto result = pipeline::run_pipeline(c);
  if (result.metrics) {
    print_warnings(*result.metrics);
    eval::write_metric_table(std::cout, *result.metrics);
  }
  std::cerr << "queries " << result.traces.size() << ", failed " << result.failures << ", judge calls "
            << result.judge_calls << '\n';
  int code = 0;
  for (const auto& t : result.traces) {
    if (!t.ok) {
      std::cerr << "query '" << t.query_id << "' failed: " << t.error << '\n';
      if (code == 0) code = exit_code(t.error_kind);
    }
  }
  // Partial success still produces a usable run file.
  return result.runs.empty() ? code : 0;
}

void cmd_bench(const Options& o) {
  switch (scenarios::parse_scenario(o.scenario)) {
    case scenarios::Scenario::latency: {
      scenarios::LatencyOptions lo;
      lo.passages = o.bench_passages;
      lo.dim = o.bench_dim;
      lo.budget = o.bench_budget;
      lo.repeats = o.repeats;
      lo.kernel = gpr::parse_kernel(o.kernel);
      lo.seed = o.seed;
      scenarios::print(std::cout, scenarios::run_latency(lo));
      const std::size_t sizes[] = {o.bench_passages / 10, o.bench_passages / 2, o.bench_passages};
      scenarios::print(std::cout, scenarios::run_scaling(sizes, o.bench_dim, o.bench_budget, o.repeats, o.seed));
      break;
    }
    case scenarios::Scenario::multimodal:
      scenarios::print(std::cout, scenarios::run_multimodal(o.seeds));
      break;
    case scenarios::Scenario::augmentation:
      scenarios::print(std::cout, scenarios::run_augmentation(o.seeds));
      break;
    case scenarios::Scenario::sensitivity: {
      const auto rows = scenarios::run_sensitivity(o.seeds);
      scenarios::print(std::cout, rows);
      break;
    }
  }
}

}  // namespace

void register_commands(CLI::App& app, int& exit_code) {
  auto o = std::make_shared<Options>();

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus, or write a synthetic one");
  ingest->add_option("--passages", o->passages, "Passage records (JSON lines)");
  ingest->add_option("--embeddings", o->embeddings, "Passage embeddings (EMB1)");
  ingest->add_option("--queries", o->queries, "Query records (JSON lines)");
  ingest->add_option("--query-embeddings", o->query_embeddings, "Query embeddings (EMB1)");
  ingest->add_option("--qrels", o->qrels, "Qrels file");
  ingest->add_option("--synthetic", o->synthetic_dir, "Write a seeded topic corpus into this directory");
  ingest->add_option("--items", o->topic.items, "Synthetic items")->capture_default_str();
  ingest->add_option("--passages-per-item", o->topic.passages_per_item, "Synthetic passages per item")
      ->capture_default_str();
  ingest->add_option("--dim", o->topic.dim, "Synthetic embedding dimension")->capture_default_str();
  ingest->add_option("--topics", o->topic.topics, "Synthetic topics")->capture_default_str();
  ingest->add_option("--num-queries", o->topic.queries, "Synthetic queries")->capture_default_str();
  ingest->add_option("--seed", o->topic.seed, "Synthetic seed")->capture_default_str();
  ingest->callback([o, &exit_code] {
    cmd_ingest(*o);
    exit_code = 0;
  });

  auto* retrieve = app.add_subcommand("retrieve", "Dense retrieval: top-k passages per query");
  add_corpus(retrieve, *o, true);
  retrieve->add_option("--similarity", o->similarity, "Similarity")
      ->check(CLI::IsMember({"dot", "cosine"}))
      ->capture_default_str();
  retrieve->add_option("--top-k", o->top_k, "Passages per query")->capture_default_str();
  retrieve->add_option("--output,-o", o->output, "Output file (default stdout)");
  retrieve->add_option("--run-tag", o->run_tag, "Run tag column")->capture_default_str();
  retrieve->callback([o] { cmd_retrieve(*o); });

  auto* sample = app.add_subcommand("sample", "Epsilon-greedy sample of passages to judge");
  add_config(sample);
  add_corpus(sample, *o, true);
  add_sampler(sample, *o);
  sample->add_option("--output,-o", o->output, "Output JSON lines (default stdout)");
  sample->callback([o] { cmd_sample(*o); });

  auto* judge = app.add_subcommand("judge", "Judge the sampled passages of every query");
  add_config(judge);
  add_corpus(judge, *o, true);
  add_sampler(judge, *o);
  add_judge(judge, *o);
  judge->add_option("--qrels", o->qrels, "Qrels (for --oracle qrels)");
  judge->add_option("--output,-o", o->output, "Judgments as JSON lines (default stdout)");
  judge->callback([o] { cmd_judge(*o); });

  auto* rank = app.add_subcommand("rank", "Fit GPR on judgments and rank items");
  add_config(rank);
  add_corpus(rank, *o, true);
  add_judge(rank, *o);
  add_gpr(rank, *o);
  add_aggregation(rank, *o);
  rank->add_option("--judgments", o->judgments, "Judgments from `gprllm judge`")->required();
  add_run_output(rank, *o);
  rank->callback([o] { cmd_rank(*o); });

  auto* ev = app.add_subcommand("eval", "Evaluate a run file against qrels");
  ev->add_option("--run", o->run, "TREC run file")->required();
  ev->add_option("--qrels", o->qrels, "Qrels file")->required();
  add_metrics(ev, *o);
  ev->add_option("--jsonl", o->jsonl, "Also write per-query metrics as JSON lines");
  ev->callback([o] { cmd_eval(*o); });

  auto* cmp = app.add_subcommand("compare", "Paired t-tests between two runs");
  cmp->add_option("--run-a", o->run_a, "First run file")->required();
  cmp->add_option("--run-b", o->run_b, "Second run file")->required();
  cmp->add_option("--qrels", o->qrels, "Qrels file")->required();
  add_metrics(cmp, *o);
  cmp->callback([o] { cmd_compare(*o); });

  auto* pipe = app.add_subcommand("pipeline", "Retrieve, sample, judge, fit, score, aggregate and evaluate");
  add_config(pipe);
  add_corpus(pipe, *o, true);
  pipe->add_option("--qrels", o->qrels, "Qrels file (enables evaluation)");
  add_sampler(pipe, *o);
  add_judge(pipe, *o);
  add_gpr(pipe, *o);
  add_aggregation(pipe, *o);
  add_run_output(pipe, *o);
  pipe->add_option("--trace", o->trace, "Per-query trace (JSON lines)");
  pipe->add_option("--metrics", o->metrics_out, "Per-query metrics (JSON lines)");
  pipe->add_option("--gain", o->gain, "NDCG gain")->check(CLI::IsMember({"linear", "exp"}))->capture_default_str();
  pipe->callback([o, &exit_code] { exit_code = cmd_pipeline(*o); });

  auto* bench = app.add_subcommand("bench", "Synthetic benchmark scenarios");
  bench->add_option("--scenario", o->scenario, "Scenario")
      ->check(CLI::IsMember({"latency", "multimodal", "augmentation", "sensitivity"}))
      ->capture_default_str();
  bench->add_option("--passages", o->bench_passages, "Latency: corpus size")->capture_default_str();
  bench->add_option("--dim", o->bench_dim, "Latency: embedding dimension")->capture_default_str();
  bench->add_option("--budget", o->bench_budget, "Latency: judged passages")->capture_default_str();
  bench->add_option("--repeats", o->repeats, "Latency: repeats")->capture_default_str();
  bench->add_option("--kernel", o->kernel, "Latency: kernel")
      ->check(CLI::IsMember({"dot", "cosine", "rbf"}))
      ->capture_default_str();
  bench->add_option("--seeds", o->seeds, "Seeds (or queries) for the fixture scenarios")->capture_default_str();
  bench->add_option("--seed", o->seed, "Latency: seed")->capture_default_str();
  bench->callback([o] { cmd_bench(*o); });
}

std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  if (args.empty()) return args;
  const CLI::App* sub = app.get_subcommand_no_throw(args[0]);
  if (sub == nullptr || sub->get_option_no_throw("--config") == nullptr) return args;

  std::string file;
  std::vector<std::string> rest;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 == args.size()) throw ConfigError("--config needs a file");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (file.empty()) return args;

  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(file);
  } catch (const CLI::ParseError& e) {
    throw ConfigError("config " + file + ": " + e.what());
  }

  auto given = [&](const CLI::Option* opt) {
    for (const auto& a : rest) {
      const auto flag = a.substr(0, a.find('='));
      for (const auto& l : opt->get_lnames()) {
        if (flag == "--" + l) return true;
      }
      for (const auto& sn : opt->get_snames()) {
        if (flag == "-" + sn) return true;
      }
    }
    return false;
  };

  std::vector<std::string> out{args[0]};
  for (const auto& item : items) {
    if (!item.parents.empty() && item.parents != std::vector<std::string>{args[0]}) continue;
    const CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw ConfigError("config " + file + ": unknown option '" + item.name + "'");
    if (given(opt)) continue;
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    out.push_back("--" + item.name + "=" + value);
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace gprllm::cli
