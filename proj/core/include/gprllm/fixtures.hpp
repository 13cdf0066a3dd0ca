#pragma once

// Seeded synthetic corpora with planted relevance, used by tests, the bench
// scenarios and `gprllm ingest --synthetic`.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gprllm/corpus.hpp"
#include "gprllm/judge.hpp"
#include "gprllm/rng.hpp"

namespace gprllm::fixtures {

/// Box-Muller over the counter generator, so fixtures are identical on every
/// platform.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}
  double operator()();
  double uniform() { return rng_.uniform(); }
  std::uint64_t below(std::uint64_t bound) { return rng_.below(bound); }

 private:
  CounterRng rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct PlantedDataset {
  corpus::Corpus corpus;
  std::vector<corpus::Query> queries;
  corpus::Qrels qrels;
  std::vector<std::vector<double>> truth;  // [query][row], unscaled judge score
};

/// Synthetic judge oracle returning the planted truth of a dataset query.
judge::Oracle truth_oracle(const PlantedDataset& data);

/// Builds a corpus from row-major vectors and a per-row item index. Item ids
/// are "item00042", passage ids "p0000123".
corpus::Corpus make_corpus(std::size_t rows, std::size_t dim, std::vector<float> data,
                           const std::vector<std::size_t>& item_of_row);

std::string item_name(std::size_t index);

/// Topic-structured corpus: each query is near one topic and also finds a
/// second, distant topic relevant (grades 3 and 2).
struct TopicCorpusSpec {
  std::size_t items = 200;
  std::size_t passages_per_item = 25;
  std::size_t dim = 32;
  std::size_t topics = 10;
  std::size_t queries = 10;
  std::uint64_t seed = 7;
};
PlantedDataset topic_corpus(const TopicCorpusSpec& spec);

/// Gaussian vectors with items of passages_per_item consecutive rows; one
/// query; truth is the cosine oracle scaled to [0, 3].
PlantedDataset random_corpus(std::size_t passages, std::size_t dim, std::size_t passages_per_item, std::uint64_t seed);

/// Two relevant clusters in D = 16: a small one around the query and a large
/// one at the antipode, among random background items. One query.
PlantedDataset two_cluster(std::uint64_t seed);

/// Relevant items sit inside the convex hull of a shell of background items
/// on which the query lies, so no linear scorer can rank them first.
struct AugmentationFixture {
  PlantedDataset data;
  std::vector<std::uint32_t> high_rows;  // one passage per relevant item, shuffled
  std::vector<std::uint32_t> low_rows;   // one passage per background item outside the greedy base, shuffled
};
AugmentationFixture augmentation(std::uint64_t seed);

/// Writes passages.jsonl, embeddings.emb, queries.jsonl, queries.emb and
/// qrels.txt under dir.
void write_dataset(const PlantedDataset& data, const std::filesystem::path& dir);

}  // namespace gprllm::fixtures
