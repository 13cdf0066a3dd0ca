#include <cinttypes>
#include <cstdio>
#include <string>

#include "gprllm/error.hpp"
#include "gprllm/judge.hpp"
#include "json.hpp"

namespace gprllm::judge {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::uint64_t parse_hex64(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw DataError("judgment cache line " + std::to_string(line) + ": bad prompt_hash '" + s + "'");
  }
  return v;
}

}  // namespace

std::string JudgmentCache::flat_key(const Key& key) {
  std::string k;
  k.reserve(key.model.size() + key.query_id.size() + key.passage_id.size() + 20);
  k.append(key.model).push_back('\x1f');
  k.append(key.query_id).push_back('\x1f');
  k.append(key.passage_id).push_back('\x1f');
  k.append(hex64(key.prompt_hash));
  return k;
}

JudgmentCache::JudgmentCache(const std::filesystem::path& path) {
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open judgment cache " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto rec = nlohmann::json::parse(line);
        Key key{rec.at("model").get<std::string>(), rec.at("query_id").get<std::string>(),
                rec.at("passage_id").get<std::string>(),
                parse_hex64(rec.at("prompt_hash").get<std::string>(), line_no)};
        RawJudgment value{rec.at("score").get<double>(), parse_source(rec.at("source").get<std::string>())};
        entries_[flat_key(key)] = value;
      } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": judgment cache line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  out_.open(path, std::ios::app);
  if (!out_) throw ConfigError("cannot append to judgment cache " + path.string());
}

std::optional<RawJudgment> JudgmentCache::lookup(const Key& key) const {
  const std::string k = flat_key(key);
  std::lock_guard lock(mutex_);
  auto it = entries_.find(k);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void JudgmentCache::insert(const Key& key, const RawJudgment& value) {
  std::string k = flat_key(key);
  std::lock_guard lock(mutex_);
  entries_[std::move(k)] = value;
  if (out_.is_open()) {
    out_ << nlohmann::json{{"model", key.model},
                           {"query_id", key.query_id},
                           {"passage_id", key.passage_id},
                           {"prompt_hash", hex64(key.prompt_hash)},
                           {"score", value.score},
                           {"source", std::string(to_string(value.source))}}
                .dump()
         << '\n';
    out_.flush();
  }
}

std::size_t JudgmentCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace gprllm::judge
