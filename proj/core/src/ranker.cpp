#include "gprllm/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "gprllm/error.hpp"

namespace gprllm::ranker {

Phi parse_phi(std::string_view name) {
  if (name == "mean") return Phi::mean;
  if (name == "max") return Phi::max;
  throw ConfigError("unknown aggregation '" + std::string(name) + "' (expected mean or max)");
}

std::string_view to_string(Phi phi) noexcept { return phi == Phi::mean ? "mean" : "max"; }

void AggregationConfig::validate() const {
  if (top_T < 1) throw ConfigError("top-T must be >= 1");
  if (cutoff_K < 1) throw ConfigError("cutoff must be >= 1");
}

ItemScores aggregate_items(std::span<const double> passage_scores, const corpus::Corpus& corpus,
                           const AggregationConfig& cfg) {
  cfg.validate();
  if (passage_scores.size() != corpus.passage_count()) {
    throw DataError("aggregate_items: " + std::to_string(passage_scores.size()) + " scores for " +
                    std::to_string(corpus.passage_count()) + " passages");
  }
  ItemScores out;
  std::vector<std::uint32_t> rows;
  for (const auto& item : corpus.items().items()) {
    if (item.rows.empty()) throw DataError("item '" + item.id + "' has no passages");
    rows = item.rows;
    const std::size_t t = std::min(cfg.top_T, rows.size());
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(t), rows.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        const double sa = passage_scores[a], sb = passage_scores[b];
                        return sa > sb || (sa == sb && a < b);
                      });
    double agg = 0.0;
    if (cfg.phi == Phi::max) {
      agg = passage_scores[rows[0]];
    } else {
      for (std::size_t i = 0; i < t; ++i) agg += passage_scores[rows[i]];
      agg /= static_cast<double>(t);
    }
    if (!std::isfinite(agg)) throw DataError("non-finite score for item '" + item.id + "'");
    out.emplace(item.id, agg);
  }
  return out;
}

RankedList rank_items(std::string query_id, const ItemScores& item_scores, const AggregationConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string_view, double>> all(item_scores.begin(), item_scores.end());
  const std::size_t k = std::min(cfg.cutoff_K, all.size());
  // item_scores iterates in item_id order, so a stable partial order keeps the
  // lexicographic tie-break; the comparator also spells it out.
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [](const auto& a, const auto& b) {
                      return a.second > b.second || (a.second == b.second && a.first < b.first);
                    });
  RankedList list{std::move(query_id), {}};
  list.entries.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    list.entries.push_back({std::string(all[i].first), all[i].second, i + 1});
  }
  return list;
}

std::string format_score(double score) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", score);
  return buf;
}

void write_trec_run(std::ostream& out, std::span<const RankedList> runs, std::string_view run_tag,
                    std::span<const std::string> header_lines) {
  for (const auto& line : header_lines) out << "# " << line << '\n';
  for (const auto& list : runs) {
    for (const auto& e : list.entries) {
      out << list.query_id << " Q0 " << e.item_id << ' ' << e.rank << ' ' << format_score(e.score) << ' '
          << run_tag << '\n';
    }
  }
}

std::vector<RankedList> read_trec_run(std::istream& in) {
  std::vector<RankedList> lists;
  std::unordered_map<std::string, std::size_t> position;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string qid, q0, item, rank_text, score_text, tag, extra;
    if (!(fields >> qid >> q0 >> item >> rank_text >> score_text >> tag) || (fields >> extra)) {
      throw DataError("run line " + std::to_string(line_no) + ": expected 6 fields");
    }
    std::size_t rank = 0;
    double score = 0.0;
    try {
      std::size_t used = 0;
      rank = std::stoul(rank_text, &used);
      if (used != rank_text.size()) throw std::invalid_argument("rank");
      score = std::stod(score_text, &used);
      if (used != score_text.size()) throw std::invalid_argument("score");
    } catch (const std::exception&) {
      throw DataError("run line " + std::to_string(line_no) + ": bad rank or score");
    }
    auto [it, inserted] = position.try_emplace(qid, lists.size());
    if (inserted) lists.push_back({qid, {}});
    lists[it->second].entries.push_back({item, score, rank});
  }
  for (auto& list : lists) {
    std::stable_sort(list.entries.begin(), list.entries.end(),
                     [](const RankedEntry& a, const RankedEntry& b) { return a.rank < b.rank; });
  }
  return lists;
}

std::vector<RankedList> load_trec_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return read_trec_run(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace gprllm::ranker
