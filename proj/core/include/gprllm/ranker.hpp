#pragma once

// Item-level aggregation of passage scores and TREC run file I/O.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gprllm/corpus.hpp"

namespace gprllm::ranker {

enum class Phi { mean, max };

Phi parse_phi(std::string_view name);
std::string_view to_string(Phi phi) noexcept;

struct AggregationConfig {
  std::size_t top_T = 3;
  Phi phi = Phi::mean;
  std::size_t cutoff_K = 100;

  void validate() const;
};

struct RankedEntry {
  std::string item_id;
  double score = 0.0;
  std::size_t rank = 0;  // from 1
};

struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;
};

using ItemScores = std::map<std::string, double>;

/// phi over each item's top_T passages (ties inside an item by row). Items
/// with fewer passages aggregate over all of them.
ItemScores aggregate_items(std::span<const double> passage_scores, const corpus::Corpus& corpus,
                           const AggregationConfig& cfg);

/// Descending score, ties by item_id, truncated to cfg.cutoff_K.
RankedList rank_items(std::string query_id, const ItemScores& item_scores, const AggregationConfig& cfg);

/// "%.6f" as used in run files.
std::string format_score(double score);

/// "query_id Q0 item_id rank score run_tag" per entry. Each header line is
/// written prefixed with "# ".
void write_trec_run(std::ostream& out, std::span<const RankedList> runs, std::string_view run_tag,
                    std::span<const std::string> header_lines = {});

/// Reads a run file, skipping "#" comment lines. Lists keep first-appearance
/// query order with entries sorted by rank. Throws DataError naming the line.
std::vector<RankedList> read_trec_run(std::istream& in);
std::vector<RankedList> load_trec_run(const std::filesystem::path& path);

}  // namespace gprllm::ranker
