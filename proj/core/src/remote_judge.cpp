#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <semaphore>
#include <string>
#include <thread>

#include "gprllm/error.hpp"
#include "gprllm/judge.hpp"
#include "httplib.h"
#include "json.hpp"

namespace gprllm::judge {

namespace {

std::string label_text(double label) {
  if (label == std::floor(label) && std::abs(label) < 1e15) {
    return std::to_string(static_cast<long long>(label));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", label);
  return buf;
}

std::string trim_token(std::string_view t) {
  const auto is_junk = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '"'; };
  while (!t.empty() && is_junk(t.front())) t.remove_prefix(1);
  while (!t.empty() && is_junk(t.back())) t.remove_suffix(1);
  return std::string(t);
}

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("malformed judge endpoint URL '" + url + "'");
  Endpoint e{m[1].str(), m[2].matched ? m[2].str() : std::string("/v1/chat/completions")};
  return e;
}

// Scans the content for "index": label pairs. Returns index -> (label value,
// character offset of the label in the content).
std::map<std::size_t, std::pair<double, std::size_t>> scan_label_map(const std::string& content) {
  static const std::regex pair_re(R"re("?(\d+)"?\s*:\s*"?(-?\d+(?:\.\d+)?))re");
  std::map<std::size_t, std::pair<double, std::size_t>> out;
  const auto open = content.find('{');
  if (open == std::string::npos) return out;
  for (auto it = std::sregex_iterator(content.begin() + static_cast<std::ptrdiff_t>(open), content.end(), pair_re);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const std::size_t idx = std::stoul(m[1].str());
    const std::size_t pos = open + static_cast<std::size_t>(m.position(2));
    out[idx] = {std::stod(m[2].str()), pos};
  }
  return out;
}

}  // namespace

std::vector<RawJudgment> parse_completion(std::string_view body, std::size_t n, std::span<const double> labels) {
  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw JudgeError(std::string("judge response is not JSON: ") + e.what());
  }
  const nlohmann::json* choice = nullptr;
  if (resp.contains("choices") && resp["choices"].is_array() && !resp["choices"].empty()) {
    choice = &resp["choices"][0];
  }
  if (!choice || !choice->contains("message") || !(*choice)["message"].contains("content") ||
      !(*choice)["message"]["content"].is_string()) {
    throw JudgeError("judge response has no choices[0].message.content");
  }
  const std::string content = (*choice)["message"]["content"].get<std::string>();
  const auto label_map = scan_label_map(content);

  std::vector<std::string> label_strings;
  for (double l : labels) label_strings.push_back(label_text(l));

  // Token offsets, usable only when the tokens reassemble the content.
  struct Token {
    std::size_t begin, end;
    const nlohmann::json* entry;
  };
  std::vector<Token> tokens;
  if (choice->contains("logprobs") && (*choice)["logprobs"].is_object() &&
      (*choice)["logprobs"].contains("content") && (*choice)["logprobs"]["content"].is_array()) {
    std::string joined;
    for (const auto& entry : (*choice)["logprobs"]["content"]) {
      if (!entry.contains("token") || !entry["token"].is_string()) {
        tokens.clear();
        joined.clear();
        break;
      }
      const auto& t = entry["token"].get_ref<const std::string&>();
      tokens.push_back({joined.size(), joined.size() + t.size(), &entry});
      joined += t;
    }
    if (joined != content) tokens.clear();
  }

  std::vector<RawJudgment> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = label_map.find(i);
    if (it == label_map.end()) {
      throw JudgeError("judge response has no label for passage index " + std::to_string(i));
    }
    const auto [value, pos] = it->second;
    const auto li = std::find_if(labels.begin(), labels.end(), [&](double l) { return std::abs(l - value) < 1e-9; });
    if (li == labels.end()) {
      throw JudgeError("judge returned label " + label_text(value) + " for passage index " + std::to_string(i) +
                       ", which is not a valid relevance level");
    }
    out[i] = {value, Source::parsed_label};

    auto tok = std::find_if(tokens.begin(), tokens.end(), [&](const Token& t) { return t.begin <= pos && pos < t.end; });
    if (tok == tokens.end() || !tok->entry->contains("top_logprobs") || !(*tok->entry)["top_logprobs"].is_array()) {
      continue;
    }
    // Best logprob per label among the alternatives offered at this position.
    std::vector<double> best(labels.size(), -std::numeric_limits<double>::infinity());
    for (const auto& alt : (*tok->entry)["top_logprobs"]) {
      if (!alt.contains("token") || !alt["token"].is_string() || !alt.contains("logprob") ||
          !alt["logprob"].is_number()) {
        continue;
      }
      const std::string t = trim_token(alt["token"].get<std::string>());
      for (std::size_t k = 0; k < labels.size(); ++k) {
        if (t == label_strings[k]) best[k] = std::max(best[k], alt["logprob"].get<double>());
      }
    }
    std::vector<double> z, r;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (std::isfinite(best[k])) {
        z.push_back(best[k]);
        r.push_back(labels[k]);
      }
    }
    if (z.size() >= 2) {
      out[i] = {expected_relevance(z, r), Source::logprob};
    } else if (z.size() == 1) {
      out[i] = {r[0], Source::logprob};
    }
  }
  return out;
}

struct RemoteJudge::Impl {
  JudgeConfig cfg;
  Endpoint endpoint;
  std::counting_semaphore<4096> inflight;

  explicit Impl(const JudgeConfig& c)
      : cfg(c), endpoint(split_url(c.endpoint_url)),
        inflight(static_cast<std::ptrdiff_t>(std::min<std::size_t>(c.max_inflight, 4096))) {}
};

RemoteJudge::RemoteJudge(const JudgeConfig& cfg) {
  cfg.validate();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (cfg.endpoint_url.rfind("https://", 0) == 0) {
    throw ConfigError("https judge endpoints need a build with OpenSSL");
  }
#endif
  impl_ = std::make_unique<Impl>(cfg);
}

RemoteJudge::~RemoteJudge() = default;

std::vector<RawJudgment> RemoteJudge::judge_batch(const BatchRequest& request) {
  const auto& cfg = impl_->cfg;
  const std::string prompt = build_prompt(request.query->text, request.texts);
  const nlohmann::json payload = {
      {"model", cfg.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", 0},
      {"logprobs", true},
      {"top_logprobs", cfg.top_logprobs},
  };
  const std::string body = payload.dump();
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

  std::string last_error;
  auto backoff = cfg.initial_backoff;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Result res{nullptr, httplib::Error::Unknown};
    {
      impl_->inflight.acquire();
      struct Release {
        std::counting_semaphore<4096>& s;
        ~Release() { s.release(); }
      } release{impl_->inflight};
      httplib::Client client(impl_->endpoint.scheme_host_port);
      const auto secs = static_cast<time_t>(cfg.timeout_seconds);
      client.set_connection_timeout(secs, 0);
      client.set_read_timeout(secs, 0);
      res = client.Post(impl_->endpoint.path, headers, body, "application/json");
    }
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw JudgeError("judge endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
      return parse_completion(res->body, request.rows.size(), cfg.labels);
    } catch (const JudgeError& e) {
      last_error = e.what();
    }
  }
  throw JudgeError("judge request failed after " + std::to_string(cfg.max_retries + 1) + " attempts: " + last_error);
}

}  // namespace gprllm::judge
