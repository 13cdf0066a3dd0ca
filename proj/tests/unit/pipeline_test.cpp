#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "gprllm/error.hpp"
#include "gprllm/fixtures.hpp"
#include "gprllm/pipeline.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace gprllm;
using namespace gprllm::pipeline;

namespace {

RunConfig config_for(const oracle::TempDir& dir) {
  RunConfig c;
  c.passages = dir / "passages.jsonl";
  c.embeddings = dir / "embeddings.emb";
  c.queries = dir / "queries.jsonl";
  c.query_embeddings = dir / "queries.emb";
  c.qrels = dir / "qrels.txt";
  c.run_out = dir / "run.txt";
  c.trace_out = dir / "trace.jsonl";
  c.metrics_out = dir / "metrics.jsonl";
  c.sampler.epsilon = 0.3;
  c.sampler.budget = 25;
  c.sampler.eta = 200;
  c.seed = 42;
  return c;
}

// Fails every request for one query; everything else goes to the oracle.
class FailingForQuery final : public judge::JudgeBackend {
 public:
  FailingForQuery(std::string bad, judge::Oracle oracle) : bad_(std::move(bad)), oracle_(std::move(oracle)) {}
  std::vector<judge::RawJudgment> judge_batch(const judge::BatchRequest& req) override {
    if (req.query->query_id == bad_) throw JudgeError("endpoint down");
    std::vector<judge::RawJudgment> out;
    for (auto r : req.rows) out.push_back({oracle_(*req.query, r), judge::Source::synthetic});
    return out;
  }

 private:
  std::string bad_;
  judge::Oracle oracle_;
};

}  // namespace

TEST(Pipeline, EndToEndOnTopicFixture) {
  oracle::TempDir dir("e2e");
  const auto data = fixtures::topic_corpus({});
  ASSERT_EQ(data.corpus.passage_count(), 5000u);
  ASSERT_EQ(data.corpus.item_count(), 200u);
  fixtures::write_dataset(data, dir.path());
  auto cfg = config_for(dir);
  cfg.synthetic_oracle = "qrels";

  const auto t0 = std::chrono::steady_clock::now();
  const auto result = run_pipeline(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 30.0);

  EXPECT_EQ(result.failures, 0u);
  ASSERT_EQ(result.runs.size(), 10u);
  ASSERT_TRUE(result.metrics);
  EXPECT_GT(result.metrics->means[2], 0.5);  // NDCG@10

  const auto runs = ranker::load_trec_run(cfg.run_out);
  ASSERT_EQ(runs.size(), 10u);
  for (const auto& r : runs) {
    EXPECT_EQ(r.entries.size(), 100u);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
      EXPECT_EQ(r.entries[i].rank, i + 1);
      EXPECT_TRUE(seen.insert(r.entries[i].item_id).second);
      if (i) EXPECT_GE(r.entries[i - 1].score, r.entries[i].score);
    }
  }

  std::istringstream trace(oracle::slurp(cfg.trace_out));
  std::string line;
  std::size_t n = 0;
  while (std::getline(trace, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j["ok"].get<bool>());
    EXPECT_LE(j["judge_calls"].get<std::size_t>(), 25u);
    EXPECT_EQ(j["greedy"].get<std::size_t>() + j["exploratory"].get<std::size_t>(), 25u);
    EXPECT_GT(j["length_scale"].get<double>(), 0.0);
    ++n;
  }
  EXPECT_EQ(n, 10u);
  for (const auto& t : result.traces) {
    EXPECT_LE(std::abs(t.seconds.stage_sum() - t.seconds.total), 0.05 * t.seconds.total + 1e-4);
  }
}

TEST(Pipeline, WarmCacheIsByteIdenticalWithNoJudgeCalls) {
  oracle::TempDir dir("warm");
  fixtures::write_dataset(fixtures::topic_corpus({}), dir.path());
  auto cfg = config_for(dir);
  cfg.cache = dir / "cache.jsonl";
  const auto cold = run_pipeline(cfg);
  EXPECT_LE(cold.judge_calls, 250u);
  EXPECT_GT(cold.judge_calls, 0u);
  const auto first = oracle::slurp(cfg.run_out);
  const auto warm = run_pipeline(cfg);
  EXPECT_EQ(warm.judge_calls, 0u);
  EXPECT_EQ(oracle::slurp(cfg.run_out), first);

  cfg.judge.backend = judge::Backend::cache_only;
  cfg.workers = 3;
  const auto replay = run_pipeline(cfg);
  EXPECT_EQ(replay.failures, 0u);
  EXPECT_EQ(replay.judge_calls, 0u);
}

TEST(Pipeline, WorkerCountDoesNotChangeOutput) {
  oracle::TempDir dir("workers");
  fixtures::write_dataset(fixtures::topic_corpus({}), dir.path());
  auto cfg = config_for(dir);
  run_pipeline(cfg);
  const auto serial = oracle::slurp(cfg.run_out);
  cfg.workers = 4;
  run_pipeline(cfg);
  // The header records the worker count; compare the ranking lines only.
  auto body = [](const std::string& s) {
    std::istringstream in(s);
    std::string line, out;
    while (std::getline(in, line)) {
      if (line.rfind("#", 0) != 0) out += line + "\n";
    }
    return out;
  };
  EXPECT_EQ(body(oracle::slurp(cfg.run_out)), body(serial));
}

TEST(Pipeline, FailedQueryIsIsolatedUnlessStrict) {
  const auto data = fixtures::topic_corpus({});
  RunConfig cfg;
  cfg.sampler.epsilon = 0.2;
  cfg.sampler.budget = 10;
  cfg.sampler.eta = 100;
  auto backend = std::make_shared<FailingForQuery>("q003", fixtures::truth_oracle(data));
  judge::Judge judge(cfg.judge, backend, nullptr);
  const auto result = run_queries(cfg, data.corpus, data.queries, judge, &data.qrels);
  EXPECT_EQ(result.failures, 1u);
  EXPECT_EQ(result.runs.size(), 9u);
  ASSERT_EQ(result.traces.size(), 10u);
  EXPECT_FALSE(result.traces[3].ok);
  EXPECT_EQ(result.traces[3].error_kind, ErrorKind::judge_transport);
  EXPECT_NE(result.traces[3].error.find("endpoint down"), std::string::npos);
  for (const auto& r : result.runs) EXPECT_NE(r.query_id, "q003");

  cfg.strict = true;
  EXPECT_THROW(run_queries(cfg, data.corpus, data.queries, judge, &data.qrels), JudgeError);
}

TEST(Pipeline, SingleLabelBudget) {
  const auto data = fixtures::topic_corpus({});
  RunConfig cfg;
  cfg.sampler.budget = 1;
  cfg.sampler.eta = 100;
  cfg.gpr.kernel = gpr::KernelKind::dot;
  judge::Judge judge(cfg.judge, std::make_shared<judge::SyntheticJudge>(fixtures::truth_oracle(data), cfg.judge.labels),
                     nullptr);
  const auto r = process_query(data.queries[0], data.corpus, judge, cfg);
  EXPECT_EQ(r.trace.greedy, 1u);
  EXPECT_EQ(r.trace.judge_calls, 1u);
  EXPECT_FALSE(r.ranking.entries.empty());
}

TEST(Pipeline, ConfigValidation) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.workers = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.gpr.ell_init = 1e6;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.synthetic_oracle = "magic";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.sampler.budget = 200;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Pipeline, DescribeOmitsSecrets) {
  RunConfig cfg;
  cfg.judge.api_key = "sk-very-secret";
  for (const auto& line : cfg.describe()) EXPECT_EQ(line.find("sk-very-secret"), std::string::npos);
}

TEST(Pipeline, MissingInputIsConfigError) {
  oracle::TempDir dir("missing");
  auto cfg = config_for(dir);
  EXPECT_THROW(run_pipeline(cfg), ConfigError);
}
