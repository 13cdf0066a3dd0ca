#pragma once

// Corpus loading: passages, item grouping, embeddings, queries and qrels.
//
// On-disk formats
//   EMB1 embeddings: "EMB1" magic, u32 LE rows, u32 LE dim, rows*dim f32 LE.
//   passages:        JSON lines {"passage_id", "item_id", "text"}, in
//                    embedding row order.
//   queries:         JSON lines {"query_id", "text"} plus an EMB1 file whose
//                    rows align with the record order.
//   qrels:           "query_id 0 item_id grade", whitespace separated.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gprllm::corpus {

/// Row-major float32 matrix, one row per passage (or query).
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  /// Throws DataError if data.size() != rows*dim or any value is non-finite.
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

inline constexpr std::size_t kEmbeddingHeaderBytes = 12;

EmbeddingMatrix parse_embeddings(std::span<const std::byte> bytes);
std::vector<std::byte> serialize_embeddings(const EmbeddingMatrix& m);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);

struct Passage {
  std::string passage_id;
  std::string item_id;
  std::string text;
};

/// Items in first-appearance order, each holding its passage rows in
/// ascending row order.
class ItemIndex {
 public:
  struct Item {
    std::string id;
    std::vector<std::uint32_t> rows;
  };

  void add(const std::string& item_id, std::uint32_t row);

  std::size_t size() const noexcept { return items_.size(); }
  const std::vector<Item>& items() const noexcept { return items_; }
  const Item& operator[](std::size_t i) const { return items_[i]; }
  /// Returns nullptr when the item is unknown.
  const Item* find(std::string_view item_id) const;

 private:
  std::vector<Item> items_;
  std::unordered_map<std::string, std::size_t> position_;
};

/// Passage records and their item grouping, before embeddings are joined.
struct PassageTable {
  std::vector<Passage> passages;
  ItemIndex items;
};

PassageTable parse_passages(std::istream& in);
PassageTable load_passages(const std::filesystem::path& path);
void write_passages(std::ostream& out, std::span<const Passage> passages);

/// Immutable passage collection joined with its embeddings.
class Corpus {
 public:
  /// Throws DataError when the passage count differs from the embedding rows
  /// or the corpus has no items.
  Corpus(PassageTable table, EmbeddingMatrix embeddings);

  std::size_t passage_count() const noexcept { return passages_.size(); }
  std::size_t item_count() const noexcept { return items_.size(); }
  std::size_t dim() const noexcept { return embeddings_.dim(); }

  const std::vector<Passage>& passages() const noexcept { return passages_; }
  const Passage& passage(std::size_t row) const { return passages_[row]; }
  const ItemIndex& items() const noexcept { return items_; }
  const EmbeddingMatrix& embeddings() const noexcept { return embeddings_; }

 private:
  std::vector<Passage> passages_;
  ItemIndex items_;
  EmbeddingMatrix embeddings_;
};

Corpus load_corpus(const std::filesystem::path& passages, const std::filesystem::path& embeddings);

struct Query {
  std::string query_id;
  std::string text;
  std::vector<float> embedding;
};

struct QueryRecord {
  std::string query_id;
  std::string text;
};

std::vector<QueryRecord> parse_query_records(std::istream& in);
void write_query_records(std::ostream& out, std::span<const QueryRecord> records);

/// Joins query records with their embedding rows. Throws DataError on count
/// or dimension mismatch (expected_dim == 0 skips the dimension check).
std::vector<Query> join_queries(std::vector<QueryRecord> records, const EmbeddingMatrix& embeddings,
                                std::size_t expected_dim);
std::vector<Query> load_queries(const std::filesystem::path& records,
                                const std::filesystem::path& embeddings, std::size_t expected_dim);

/// query_id -> item_id -> grade. Later duplicate lines overwrite earlier ones.
using Qrels = std::map<std::string, std::map<std::string, int>>;

Qrels parse_qrels(std::istream& in);
Qrels load_qrels(const std::filesystem::path& path);
void write_qrels(std::ostream& out, const Qrels& qrels);

/// Reads a whole file as bytes. Throws ConfigError if it cannot be opened.
std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);

}  // namespace gprllm::corpus
