#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "gprllm/error.hpp"
#include "gprllm/judge.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace gprllm;
using namespace gprllm::judge;
using nlohmann::json;

namespace {

const std::vector<double> kLabels{0, 1, 2, 3};

std::string completion(const std::string& content, const json& logprobs = nullptr) {
  json choice = {{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}};
  if (!logprobs.is_null()) choice["logprobs"] = {{"content", logprobs}};
  return json{{"choices", json::array({choice})}}.dump();
}

json token(const std::string& t, const json& top = json::array()) {
  return {{"token", t}, {"logprob", top.empty() ? 0.0 : top[0]["logprob"].get<double>()}, {"top_logprobs", top}};
}

json alt(const std::string& t, double p) { return {{"token", t}, {"logprob", std::log(p)}}; }

// Chat-completions stand-in on an ephemeral port.
class MockEndpoint {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit MockEndpoint(Handler h) : handler_(std::move(h)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      const int now = ++active_;
      int prev = max_active.load();
      while (now > prev && !max_active.compare_exchange_weak(prev, now)) {
      }
      handler_(req, res);
      --active_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  JudgeConfig config() const {
    JudgeConfig cfg;
    cfg.backend = Backend::remote;
    cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    cfg.model_name = "mock-judge";
    cfg.initial_backoff = std::chrono::milliseconds(1);
    cfg.timeout_seconds = 5;
    return cfg;
  }

  std::atomic<int> hits{0};
  std::atomic<int> max_active{0};

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> active_{0};
};

corpus::Query query() { return {"q1", "what is a gaussian process", {1.0f}}; }

BatchRequest request(const corpus::Query& q, std::size_t n) {
  static const std::string_view texts[] = {"first passage", "second passage", "third passage"};
  BatchRequest req{&q, {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    req.rows.push_back(static_cast<std::uint32_t>(i));
    req.texts.push_back(texts[i]);
  }
  return req;
}

}  // namespace

TEST(ParseCompletion, LabelMapFallback) {
  const auto out = parse_completion(completion(R"({"0": 2, "1": 3})"), 2, kLabels);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].score, 2.0);
  EXPECT_EQ(out[1].score, 3.0);
  EXPECT_EQ(out[0].source, Source::parsed_label);
}

TEST(ParseCompletion, LabelMapInsideProse) {
  const auto out = parse_completion(completion("Scores:\n```\n{\"1\": 0, \"0\": \"1\"}\n```"), 2, kLabels);
  EXPECT_EQ(out[0].score, 1.0);
  EXPECT_EQ(out[1].score, 0.0);
}

TEST(ParseCompletion, ExpectedRelevanceFromLogprobs) {
  // Label token for passage 0 carries probabilities (0.2, 0.4, 0.2, 0.2): 1.4.
  const json lp = json::array({token("{\"0\": "),
                               token("1", json::array({alt("1", 0.4), alt("0", 0.2), alt(" 2", 0.2), alt("3", 0.2)})),
                               token(", \"1\": "), token("3"), token("}")});
  const auto out = parse_completion(completion(R"({"0": 1, "1": 3})", lp), 2, kLabels);
  EXPECT_NEAR(out[0].score, 1.4, 1e-9);
  EXPECT_EQ(out[0].source, Source::logprob);
  // No alternatives offered at the second label: the parsed label stands.
  EXPECT_EQ(out[1].score, 3.0);
  EXPECT_EQ(out[1].source, Source::parsed_label);
}

TEST(ParseCompletion, TokensThatDoNotReassembleAreIgnored) {
  const json lp = json::array({token("{\"0\": "), token("2", json::array({alt("0", 0.9), alt("2", 0.1)})),
                               token("} trailing")});
  const auto out = parse_completion(completion(R"({"0": 2})", lp), 1, kLabels);
  EXPECT_EQ(out[0].source, Source::parsed_label);
  EXPECT_EQ(out[0].score, 2.0);
}

TEST(ParseCompletion, Errors) {
  EXPECT_THROW(parse_completion("not json", 1, kLabels), JudgeError);
  EXPECT_THROW(parse_completion(R"({"choices": []})", 1, kLabels), JudgeError);
  EXPECT_THROW(parse_completion(completion(R"({"0": 2})"), 2, kLabels), JudgeError);
  EXPECT_THROW(parse_completion(completion(R"({"0": 7})"), 1, kLabels), JudgeError);
}

TEST(RemoteJudge, SendsPromptAndParsesReply) {
  std::string body, auth;
  MockEndpoint server([&](const httplib::Request& req, httplib::Response& res) {
    body = req.body;
    auth = req.get_header_value("Authorization");
    res.set_content(completion(R"({"0": 2, "1": 3})"), "application/json");
  });
  auto cfg = server.config();
  cfg.api_key = "secret-token";
  RemoteJudge judge(cfg);
  const auto q = query();
  const auto out = judge.judge_batch(request(q, 2));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].score, 2.0);
  EXPECT_EQ(out[1].score, 3.0);
  EXPECT_EQ(auth, "Bearer secret-token");
  const auto sent = json::parse(body);
  EXPECT_EQ(sent["model"], "mock-judge");
  EXPECT_EQ(sent["logprobs"], true);
  EXPECT_EQ(sent["temperature"], 0);
  const auto prompt = sent["messages"][0]["content"].get<std::string>();
  EXPECT_NE(prompt.find("Query: what is a gaussian process"), std::string::npos);
  EXPECT_NE(prompt.find("[1] second passage"), std::string::npos);
}

TEST(RemoteJudge, RetriesServerErrors) {
  std::atomic<int> calls{0};
  MockEndpoint server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = calls == 1 ? 503 : 429;
      return;
    }
    res.set_content(completion(R"({"0": 1})"), "application/json");
  });
  RemoteJudge judge(server.config());
  const auto q = query();
  EXPECT_EQ(judge.judge_batch(request(q, 1))[0].score, 1.0);
  EXPECT_EQ(server.hits, 3);
}

TEST(RemoteJudge, GivesUpAfterRetries) {
  MockEndpoint server([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  auto cfg = server.config();
  cfg.max_retries = 2;
  RemoteJudge judge(cfg);
  const auto q = query();
  EXPECT_THROW(judge.judge_batch(request(q, 1)), JudgeError);
  EXPECT_EQ(server.hits, 3);
}

TEST(RemoteJudge, ClientErrorFailsImmediately) {
  MockEndpoint server([](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
    res.set_content("unauthorized", "text/plain");
  });
  RemoteJudge judge(server.config());
  const auto q = query();
  EXPECT_THROW(judge.judge_batch(request(q, 1)), JudgeError);
  EXPECT_EQ(server.hits, 1);
}

TEST(RemoteJudge, UnparseableReplyIsRetriedThenFails) {
  MockEndpoint server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion("I cannot rate these."), "application/json");
  });
  auto cfg = server.config();
  cfg.max_retries = 1;
  RemoteJudge judge(cfg);
  const auto q = query();
  EXPECT_THROW(judge.judge_batch(request(q, 1)), JudgeError);
  EXPECT_EQ(server.hits, 2);
}

TEST(RemoteJudge, UnreachableEndpointIsJudgeError) {
  JudgeConfig cfg;
  cfg.backend = Backend::remote;
  cfg.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
  cfg.max_retries = 0;
  cfg.timeout_seconds = 1;
  RemoteJudge judge(cfg);
  const auto q = query();
  EXPECT_THROW(judge.judge_batch(request(q, 1)), JudgeError);
}

TEST(RemoteJudge, InflightCapHoldsAcrossThreads) {
  MockEndpoint server([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    res.set_content(completion(R"({"0": 1})"), "application/json");
  });
  auto cfg = server.config();
  cfg.max_inflight = 2;
  RemoteJudge judge(cfg);
  const auto q = query();
  std::vector<std::thread> workers;
  std::atomic<int> ok{0};
  for (int i = 0; i < 6; ++i) {
    workers.emplace_back([&] {
      if (judge.judge_batch(request(q, 1))[0].score == 1.0) ++ok;
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(ok, 6);
  EXPECT_LE(server.max_active, 2);
}
