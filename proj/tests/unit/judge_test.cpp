#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "gprllm/error.hpp"
#include "gprllm/fixtures.hpp"
#include "gprllm/judge.hpp"
#include "oracles.hpp"

using namespace gprllm;
using namespace gprllm::judge;

namespace {

const std::vector<double> kLabels{0, 1, 2, 3};

class CountingBackend final : public JudgeBackend {
 public:
  std::vector<RawJudgment> judge_batch(const BatchRequest& req) override {
    ++requests;
    passages += req.rows.size();
    largest_batch = std::max(largest_batch, req.rows.size());
    std::vector<RawJudgment> out;
    for (auto r : req.rows) out.push_back({static_cast<double>(r % 4), Source::synthetic});
    return out;
  }
  std::size_t requests = 0, passages = 0, largest_batch = 0;
};

corpus::Corpus small_corpus() {
  std::vector<float> data;
  std::vector<std::size_t> item_of;
  for (std::size_t r = 0; r < 30; ++r) {
    data.push_back(static_cast<float>(std::cos(0.3 * r)));
    data.push_back(static_cast<float>(std::sin(0.3 * r)));
    item_of.push_back(r / 3);
  }
  return fixtures::make_corpus(30, 2, data, item_of);
}

}  // namespace

TEST(Prompt, ContainsLabelsAndTexts) {
  const std::string_view passages[] = {"p"};
  const auto prompt = build_prompt("q", passages);
  EXPECT_NE(prompt.find("0 = Unrelated to the query.\n"), std::string::npos);
  EXPECT_NE(prompt.find("3 = Fully dedicated to answering the query.\n"), std::string::npos);
  EXPECT_NE(prompt.find("Query: q\n"), std::string::npos);
  EXPECT_NE(prompt.find("[0] p"), std::string::npos);
}

TEST(Prompt, EmptyPassageListRejected) {
  EXPECT_THROW(build_prompt("q", {}), ConfigError);
}

TEST(Prompt, IndexesEveryPassage) {
  const std::string_view passages[] = {"alpha", "beta"};
  const auto prompt = build_prompt("q", passages);
  const auto a = prompt.find("[0] alpha");
  const auto b = prompt.find("[1] beta");
  ASSERT_NE(a, std::string::npos);
  ASSERT_NE(b, std::string::npos);
  EXPECT_LT(a, b);
}

TEST(Prompt, HashTracksContent) {
  EXPECT_EQ(prompt_hash("q", "p"), prompt_hash("q", "p"));
  EXPECT_NE(prompt_hash("q", "p"), prompt_hash("q", "p2"));
  EXPECT_NE(prompt_hash("q", "p"), prompt_hash("q2", "p"));
}

TEST(ExpectedRelevance, UniformLogits) {
  for (double c : {-50.0, 0.0, 3.5, 700.0}) {
    const std::vector<double> z(4, c);
    EXPECT_EQ(expected_relevance(z, kLabels), 1.5);
  }
}

TEST(ExpectedRelevance, HandComputedCase) {
  const std::vector<double> z{0, std::log(2.0), 0, 0};
  EXPECT_NEAR(expected_relevance(z, kLabels), 1.4, 1e-9);
}

TEST(ExpectedRelevance, Saturates) {
  const std::vector<double> z{0, 0, 0, 40};
  EXPECT_NEAR(expected_relevance(z, kLabels), 3.0, 1e-10);
}

TEST(ExpectedRelevance, RangeAndShiftInvariance) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd(0, 5);
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> z(4);
    for (auto& v : z) v = nd(gen);
    const double e = expected_relevance(z, kLabels);
    ASSERT_GE(e, 0.0);
    ASSERT_LE(e, 3.0);
    const double c = nd(gen) * 100;
    std::vector<double> shifted = z;
    for (auto& v : shifted) v += c;
    ASSERT_NEAR(expected_relevance(shifted, kLabels), e, 1e-12);
  }
}

TEST(ExpectedRelevance, Errors) {
  const std::vector<double> three{0, 0, 0};
  EXPECT_THROW(expected_relevance(three, kLabels), DataError);
  const std::vector<double> bad{0, NAN, 0, 0};
  EXPECT_THROW(expected_relevance(bad, kLabels), DataError);
  const std::vector<double> one{0}, label{1};
  EXPECT_THROW(expected_relevance(one, label), ConfigError);
}

TEST(Scale, AppliesMultiplier) {
  std::vector<Judgment> j{{0, 1, Source::synthetic}, {1, 2, Source::synthetic}, {2, 3, Source::synthetic}};
  const auto same = apply_scale(j, 1.0);
  EXPECT_EQ(same[2].score, 3.0);
  const auto tenth = apply_scale(j, 0.1);
  EXPECT_NEAR(tenth[0].score, 0.1, 1e-15);
  EXPECT_NEAR(tenth[1].score, 0.2, 1e-15);
  EXPECT_NEAR(tenth[2].score, 0.3, 1e-15);
  JudgeConfig cfg;
  cfg.score_scale = 10.0;
  EXPECT_EQ(cfg.s_max(), 30.0);
}

TEST(Config, Validation) {
  JudgeConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.labels = {0, 2, 1};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.score_scale = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.backend = Backend::remote;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(parse_backend("cache"), Backend::cache_only);
  EXPECT_THROW(parse_backend("gpt"), ConfigError);
}

TEST(SyntheticJudge, CosineOracleDeterministicAndInRange) {
  const auto corpus = small_corpus();
  const corpus::Query q{"q", "text", {1.0f, 0.0f}};
  auto backend = make_backend(JudgeConfig{}, corpus);
  BatchRequest req{&q, {}, {}};
  for (std::uint32_t r = 0; r < 30; ++r) {
    req.rows.push_back(r);
    req.texts.push_back(corpus.passage(r).text);
  }
  const auto a = backend->judge_batch(req);
  const auto b = backend->judge_batch(req);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_GE(a[i].score, 0.0);
    EXPECT_LE(a[i].score, 3.0);
    EXPECT_EQ(a[i].score, b[i].score);
    const double cos = std::cos(0.3 * i);
    EXPECT_NEAR(a[i].score, 3.0 * std::max(0.0, cos), 1e-6);
  }
}

TEST(SyntheticJudge, OracleOutOfRangeRejected) {
  const auto corpus = small_corpus();
  const corpus::Query q{"q", "text", {1.0f, 0.0f}};
  SyntheticJudge judge([](const corpus::Query&, std::uint32_t) { return 7.0; }, kLabels);
  BatchRequest req{&q, {0}, {corpus.passage(0).text}};
  EXPECT_THROW(judge.judge_batch(req), Error);
}

TEST(QrelsOracle, GradesByItem) {
  const auto corpus = small_corpus();
  corpus::Qrels qrels{{"q", {{fixtures::item_name(1), 2}, {fixtures::item_name(2), 9}}}};
  const auto oracle = qrels_oracle(corpus, qrels, 3.0);
  const corpus::Query q{"q", "", {1, 0}};
  EXPECT_EQ(oracle(q, 0), 0.0);
  EXPECT_EQ(oracle(q, 3), 2.0);
  EXPECT_EQ(oracle(q, 7), 3.0);
  const corpus::Query other{"other", "", {1, 0}};
  EXPECT_EQ(oracle(other, 3), 0.0);
}

TEST(Judge, BatchesCollapsesAndSorts) {
  const auto corpus = small_corpus();
  auto backend = std::make_shared<CountingBackend>();
  JudgeConfig cfg;
  cfg.batch_size = 4;
  Judge judge(cfg, backend, nullptr);
  const corpus::Query q{"q", "text", {1, 0}};
  const std::vector<std::uint32_t> rows{9, 3, 3, 12, 0, 5, 7, 21, 9, 1, 2};
  const auto out = judge.judge_passages(q, rows, corpus);
  ASSERT_EQ(out.judgments.size(), 9u);
  EXPECT_EQ(out.backend_calls, 9u);
  EXPECT_EQ(backend->passages, 9u);
  EXPECT_EQ(backend->requests, 3u);
  EXPECT_LE(backend->largest_batch, 4u);
  for (std::size_t i = 1; i < out.judgments.size(); ++i) {
    EXPECT_LT(out.judgments[i - 1].passage_row, out.judgments[i].passage_row);
  }
  EXPECT_EQ(judge.total_backend_calls(), 9u);
}

TEST(Judge, CacheHitSkipsBackendAndScalesAfterLookup) {
  const auto corpus = small_corpus();
  auto backend = std::make_shared<CountingBackend>();
  auto cache = std::make_shared<JudgmentCache>();
  const corpus::Query q{"q", "text", {1, 0}};
  const std::vector<std::uint32_t> rows{1, 2, 3};
  Judge cold(JudgeConfig{}, backend, cache);
  const auto first = cold.judge_passages(q, rows, corpus);
  EXPECT_EQ(first.backend_calls, 3u);
  EXPECT_EQ(cache->size(), 3u);

  JudgeConfig scaled;
  scaled.score_scale = 10.0;
  Judge warm(scaled, backend, cache);
  const auto second = warm.judge_passages(q, rows, corpus);
  EXPECT_EQ(second.backend_calls, 0u);
  EXPECT_EQ(second.cache_hits, 3u);
  EXPECT_EQ(backend->passages, 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(second.judgments[i].source, Source::cache);
    EXPECT_DOUBLE_EQ(second.judgments[i].score, 10.0 * first.judgments[i].score);
  }
}

TEST(Judge, CacheOnlyMissIsJudgeError) {
  const auto corpus = small_corpus();
  JudgeConfig cfg;
  cfg.backend = Backend::cache_only;
  Judge judge(cfg, nullptr, std::make_shared<JudgmentCache>());
  const corpus::Query q{"q", "text", {1, 0}};
  const std::vector<std::uint32_t> rows{1};
  EXPECT_THROW(judge.judge_passages(q, rows, corpus), JudgeError);
}

TEST(Judge, DifferentModelMisses) {
  const auto corpus = small_corpus();
  auto backend = std::make_shared<CountingBackend>();
  auto cache = std::make_shared<JudgmentCache>();
  const corpus::Query q{"q", "text", {1, 0}};
  const std::vector<std::uint32_t> rows{1, 2};
  Judge(JudgeConfig{}, backend, cache).judge_passages(q, rows, corpus);
  JudgeConfig other;
  other.model_name = "another-model";
  EXPECT_EQ(Judge(other, backend, cache).judge_passages(q, rows, corpus).backend_calls, 2u);
}

TEST(Cache, PersistsAcrossInstancesAndIsIdempotent) {
  oracle::TempDir dir("cache");
  const auto path = dir / "cache.jsonl";
  const JudgmentCache::Key k1{"m", "q", "p1", 0x1234};
  const JudgmentCache::Key k2{"m", "q", "p2", 0xabcdefULL << 32};
  {
    JudgmentCache c(path);
    c.insert(k1, {2.25, Source::logprob});
    c.insert(k2, {1.0, Source::parsed_label});
    c.insert(k2, {3.0, Source::parsed_label});
  }
  JudgmentCache reopened(path);
  EXPECT_EQ(reopened.size(), 2u);
  ASSERT_TRUE(reopened.lookup(k1));
  EXPECT_EQ(reopened.lookup(k1)->score, 2.25);
  EXPECT_EQ(reopened.lookup(k2)->score, 3.0);
  EXPECT_FALSE(reopened.lookup({"m", "q", "p1", 0x1235}));
}

TEST(Cache, MalformedLineNamesLine) {
  oracle::TempDir dir("cachebad");
  const auto path = dir / "cache.jsonl";
  {
    std::ofstream out(path);
    out << R"({"model":"m","query_id":"q","passage_id":"p","prompt_hash":"0000000000000001","score":1,"source":"logprob"})"
        << "\n{broken\n";
  }
  try {
    JudgmentCache c(path);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}
