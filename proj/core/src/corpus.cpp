#include "gprllm/corpus.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "gprllm/error.hpp"
#include "json.hpp"

namespace gprllm::corpus {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

std::uint32_t read_u32_le(const std::byte* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::vector<std::byte>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::byte>((v >> shift) & 0xFFu));
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  return in;
}

std::string required_string(const nlohmann::json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    throw DataError("line " + std::to_string(line) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.is_object()) {
      throw DataError("line " + std::to_string(line_no) + ": expected a JSON object");
    }
    fn(rec, line_no);
  }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (data_.size() != rows_ * dim_) {
    throw DataError("embedding data length " + std::to_string(data_.size()) + " != " +
                    std::to_string(rows_) + "x" + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw DataError("non-finite embedding value at byte offset " +
                      std::to_string(kEmbeddingHeaderBytes + 4 * i));
    }
  }
}

EmbeddingMatrix parse_embeddings(std::span<const std::byte> bytes) {
  if (bytes.size() < kEmbeddingHeaderBytes) {
    throw DataError("embedding file truncated in header at byte offset " +
                    std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("bad embedding magic at byte offset 0 (expected EMB1)");
  }
  const std::uint64_t rows = read_u32_le(bytes.data() + 4);
  const std::uint64_t dim = read_u32_le(bytes.data() + 8);
  const std::uint64_t expected = kEmbeddingHeaderBytes + 4 * rows * dim;
  if (bytes.size() < expected) {
    // Report where the first incomplete row starts.
    const std::uint64_t payload = bytes.size() - kEmbeddingHeaderBytes;
    const std::uint64_t row_bytes = 4 * dim;
    const std::uint64_t complete_rows = row_bytes == 0 ? 0 : payload / row_bytes;
    throw DataError("embedding payload truncated at byte offset " +
                    std::to_string(kEmbeddingHeaderBytes + complete_rows * row_bytes) + ": declared " +
                    std::to_string(rows) + " rows, found " + std::to_string(complete_rows));
  }
  if (bytes.size() > expected) {
    throw DataError("trailing bytes after embedding payload at byte offset " + std::to_string(expected));
  }
  std::vector<float> data(rows * dim);
  const std::byte* p = bytes.data() + kEmbeddingHeaderBytes;
  for (std::size_t i = 0; i < data.size(); ++i, p += 4) {
    data[i] = std::bit_cast<float>(read_u32_le(p));
    if (!std::isfinite(data[i])) {
      throw DataError("non-finite embedding value at byte offset " +
                      std::to_string(kEmbeddingHeaderBytes + 4 * i));
    }
  }
  return EmbeddingMatrix(rows, dim, std::move(data));
}

std::vector<std::byte> serialize_embeddings(const EmbeddingMatrix& m) {
  std::vector<std::byte> out;
  out.reserve(kEmbeddingHeaderBytes + 4 * m.data().size());
  for (char c : kMagic) {
    out.push_back(static_cast<std::byte>(c));
  }
  write_u32_le(out, static_cast<std::uint32_t>(m.rows()));
  write_u32_le(out, static_cast<std::uint32_t>(m.dim()));
  for (float v : m.data()) {
    write_u32_le(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  auto in = open_input(path);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  return bytes;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  try {
    return parse_embeddings(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  const auto bytes = serialize_embeddings(m);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void ItemIndex::add(const std::string& item_id, std::uint32_t row) {
  auto [it, inserted] = position_.try_emplace(item_id, items_.size());
  if (inserted) {
    items_.push_back(Item{item_id, {}});
  }
  items_[it->second].rows.push_back(row);
}

const ItemIndex::Item* ItemIndex::find(std::string_view item_id) const {
  auto it = position_.find(std::string(item_id));
  return it == position_.end() ? nullptr : &items_[it->second];
}

PassageTable parse_passages(std::istream& in) {
  PassageTable table;
  std::unordered_set<std::string> seen;
  for_each_json_line(in, [&](const nlohmann::json& rec, std::size_t line) {
    Passage p{required_string(rec, "passage_id", line), required_string(rec, "item_id", line),
              required_string(rec, "text", line)};
    if (!seen.insert(p.passage_id).second) {
      throw DataError("line " + std::to_string(line) + ": duplicate passage_id '" + p.passage_id + "'");
    }
    table.items.add(p.item_id, static_cast<std::uint32_t>(table.passages.size()));
    table.passages.push_back(std::move(p));
  });
  return table;
}

PassageTable load_passages(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_passages(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_passages(std::ostream& out, std::span<const Passage> passages) {
  for (const auto& p : passages) {
    out << nlohmann::json{{"passage_id", p.passage_id}, {"item_id", p.item_id}, {"text", p.text}}.dump()
        << '\n';
  }
}

Corpus::Corpus(PassageTable table, EmbeddingMatrix embeddings)
    : passages_(std::move(table.passages)),
      items_(std::move(table.items)),
      embeddings_(std::move(embeddings)) {
  if (passages_.size() != embeddings_.rows()) {
    throw DataError("passage count " + std::to_string(passages_.size()) +
                    " does not match embedding rows " + std::to_string(embeddings_.rows()));
  }
  if (items_.size() == 0) {
    throw DataError("corpus has no items");
  }
}

Corpus load_corpus(const std::filesystem::path& passages, const std::filesystem::path& embeddings) {
  return Corpus(load_passages(passages), load_embeddings(embeddings));
}

std::vector<QueryRecord> parse_query_records(std::istream& in) {
  std::vector<QueryRecord> out;
  std::unordered_set<std::string> seen;
  for_each_json_line(in, [&](const nlohmann::json& rec, std::size_t line) {
    QueryRecord q{required_string(rec, "query_id", line), required_string(rec, "text", line)};
    if (!seen.insert(q.query_id).second) {
      throw DataError("line " + std::to_string(line) + ": duplicate query_id '" + q.query_id + "'");
    }
    out.push_back(std::move(q));
  });
  return out;
}

void write_query_records(std::ostream& out, std::span<const QueryRecord> records) {
  for (const auto& q : records) {
    out << nlohmann::json{{"query_id", q.query_id}, {"text", q.text}}.dump() << '\n';
  }
}

std::vector<Query> join_queries(std::vector<QueryRecord> records, const EmbeddingMatrix& embeddings,
                                std::size_t expected_dim) {
  if (records.size() != embeddings.rows()) {
    throw DataError("query count " + std::to_string(records.size()) + " does not match embedding rows " +
                    std::to_string(embeddings.rows()));
  }
  if (expected_dim != 0 && embeddings.rows() > 0 && embeddings.dim() != expected_dim) {
    throw DataError("query embedding dim " + std::to_string(embeddings.dim()) +
                    " does not match corpus dim " + std::to_string(expected_dim));
  }
  std::vector<Query> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto row = embeddings.row(i);
    out.push_back(Query{std::move(records[i].query_id), std::move(records[i].text),
                        std::vector<float>(row.begin(), row.end())});
  }
  return out;
}

std::vector<Query> load_queries(const std::filesystem::path& records,
                                const std::filesystem::path& embeddings, std::size_t expected_dim) {
  auto in = open_input(records);
  std::vector<QueryRecord> recs;
  try {
    recs = parse_query_records(in);
  } catch (const DataError& e) {
    throw DataError(records.string() + ": " + e.what());
  }
  return join_queries(std::move(recs), load_embeddings(embeddings), expected_dim);
}

Qrels parse_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::istringstream fields(line);
    std::string query_id, iteration, item_id, grade_text, extra;
    if (!(fields >> query_id >> iteration >> item_id >> grade_text) || (fields >> extra)) {
      throw DataError("qrels line " + std::to_string(line_no) + ": expected 4 fields");
    }
    std::size_t consumed = 0;
    long grade = -1;
    try {
      grade = std::stol(grade_text, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (consumed != grade_text.size() || grade < 0) {
      throw DataError("qrels line " + std::to_string(line_no) + ": grade '" + grade_text +
                      "' is not a non-negative integer");
    }
    qrels[query_id][item_id] = static_cast<int>(grade);
  }
  return qrels;
}

Qrels load_qrels(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_qrels(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
  for (const auto& [query_id, items] : qrels) {
    for (const auto& [item_id, grade] : items) {
      out << query_id << " 0 " << item_id << ' ' << grade << '\n';
    }
  }
}

}  // namespace gprllm::corpus
