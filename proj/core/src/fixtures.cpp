#include "gprllm/fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include "gprllm/error.hpp"

namespace gprllm::fixtures {

namespace {

using Vec = std::vector<double>;

Vec gaussian_vec(Gaussian& g, std::size_t d, double sigma = 1.0) {
  Vec v(d);
  for (auto& x : v) x = sigma * g();
  return v;
}

double norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Vec unit_vec(Gaussian& g, std::size_t d) {
  Vec v = gaussian_vec(g, d);
  const double n = norm(v);
  for (auto& x : v) x /= n;
  return v;
}

Vec add(Vec a, const Vec& b, double scale = 1.0) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
  return a;
}

double cosine(const Vec& a, std::span<const float> b) {
  double dot = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  const double na = norm(a);
  return na == 0.0 || nb == 0.0 ? 0.0 : dot / (na * std::sqrt(nb));
}

// Accumulates rows, item assignments and planted truth for a single-query
// fixture.
struct Builder {
  std::size_t dim;
  std::vector<float> data;
  std::vector<std::size_t> item_of_row;
  std::vector<double> truth;
  std::map<std::string, int> grades;
  std::size_t items = 0;

  std::size_t add_item(const std::vector<Vec>& passages, double passage_truth, int grade) {
    const std::size_t item = items++;
    for (const auto& p : passages) {
      for (double x : p) data.push_back(static_cast<float>(x));
      item_of_row.push_back(item);
      truth.push_back(passage_truth);
    }
    if (grade > 0) grades[item_name(item)] = grade;
    return item;
  }
  std::size_t rows() const { return item_of_row.size(); }
};

corpus::Query make_query(std::string id, const Vec& v) {
  corpus::Query q{std::move(id), "synthetic query", {}};
  for (double x : v) q.embedding.push_back(static_cast<float>(x));
  return q;
}

// float copy so the truth used by tests matches the stored embedding
Vec as_stored(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

}  // namespace

double Gaussian::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = rng_.uniform();
  } while (u1 <= 0.0);
  const double u2 = rng_.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

std::string item_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "item%05zu", index);
  return buf;
}

corpus::Corpus make_corpus(std::size_t rows, std::size_t dim, std::vector<float> data,
                           const std::vector<std::size_t>& item_of_row) {
  if (item_of_row.size() != rows) throw DataError("make_corpus: item assignment length differs from rows");
  corpus::PassageTable table;
  table.passages.reserve(rows);
  char buf[32];
  for (std::size_t r = 0; r < rows; ++r) {
    std::snprintf(buf, sizeof buf, "p%07zu", r);
    corpus::Passage p{buf, item_name(item_of_row[r]), {}};
    p.text = "synthetic passage " + p.passage_id + " of " + p.item_id;
    table.items.add(p.item_id, static_cast<std::uint32_t>(r));
    table.passages.push_back(std::move(p));
  }
  return corpus::Corpus(std::move(table), corpus::EmbeddingMatrix(rows, dim, std::move(data)));
}

judge::Oracle truth_oracle(const PlantedDataset& data) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.queries.size(); ++i) index[data.queries[i].query_id] = i;
  const auto* truth = &data.truth;
  return [index = std::move(index), truth](const corpus::Query& q, std::uint32_t row) {
    auto it = index.find(q.query_id);
    if (it == index.end()) throw DataError("truth oracle: unknown query '" + q.query_id + "'");
    return (*truth)[it->second].at(row);
  };
}

PlantedDataset topic_corpus(const TopicCorpusSpec& spec) {
  if (spec.topics < 2 || spec.items < spec.topics || spec.passages_per_item == 0 || spec.dim == 0) {
    throw ConfigError("topic corpus needs >= 2 topics, items >= topics and non-empty items");
  }
  Gaussian g(spec.seed);
  const std::size_t D = spec.dim;
  const double s = 1.0 / std::sqrt(static_cast<double>(D));
  std::vector<Vec> topics;
  for (std::size_t t = 0; t < spec.topics; ++t) topics.push_back(unit_vec(g, D));

  std::vector<float> data;
  std::vector<std::size_t> item_of_row, topic_of_item;
  for (std::size_t i = 0; i < spec.items; ++i) {
    const std::size_t t = i % spec.topics;
    topic_of_item.push_back(t);
    const Vec center = add(topics[t], gaussian_vec(g, D), 0.3 * s);
    for (std::size_t p = 0; p < spec.passages_per_item; ++p) {
      const Vec v = add(center, gaussian_vec(g, D), 0.15 * s);
      for (double x : v) data.push_back(static_cast<float>(x));
      item_of_row.push_back(i);
    }
  }
  const std::size_t rows = item_of_row.size();
  auto corpus = make_corpus(rows, D, std::move(data), item_of_row);

  std::vector<corpus::Query> queries;
  corpus::Qrels qrels;
  std::vector<std::vector<double>> truth;
  char buf[32];
  for (std::size_t j = 0; j < spec.queries; ++j) {
    const std::size_t primary = j % spec.topics;
    const std::size_t secondary = (primary + spec.topics / 2) % spec.topics;
    std::snprintf(buf, sizeof buf, "q%03zu", j);
    queries.push_back(make_query(buf, add(topics[primary], gaussian_vec(g, D), 0.2 * s)));
    auto& grades = qrels[buf];
    std::vector<double> t(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t topic = topic_of_item[item_of_row[r]];
      t[r] = topic == primary ? 3.0 : topic == secondary ? 2.0 : 0.0;
    }
    for (std::size_t i = 0; i < spec.items; ++i) {
      const std::size_t topic = topic_of_item[i];
      if (topic == primary) grades[item_name(i)] = 3;
      if (topic == secondary) grades[item_name(i)] = 2;
    }
    truth.push_back(std::move(t));
  }
  return PlantedDataset{std::move(corpus), std::move(queries), std::move(qrels), std::move(truth)};
}

PlantedDataset random_corpus(std::size_t passages, std::size_t dim, std::size_t passages_per_item,
                             std::uint64_t seed) {
  if (passages == 0 || dim == 0 || passages_per_item == 0) throw ConfigError("random corpus needs N, D, P > 0");
  Gaussian g(seed);
  std::vector<float> data(passages * dim);
  for (auto& x : data) x = static_cast<float>(g());
  std::vector<std::size_t> item_of_row(passages);
  for (std::size_t r = 0; r < passages; ++r) item_of_row[r] = r / passages_per_item;
  auto corpus = make_corpus(passages, dim, std::move(data), item_of_row);
  const Vec q = as_stored(gaussian_vec(g, dim));
  std::vector<double> t(passages);
  corpus::Qrels qrels;
  for (std::size_t r = 0; r < passages; ++r) {
    t[r] = 3.0 * std::max(0.0, cosine(q, corpus.embeddings().row(r)));
    if (t[r] > 1.0) qrels["q000"][item_name(item_of_row[r])] = 1;
  }
  std::vector<corpus::Query> queries{make_query("q000", q)};
  return PlantedDataset{std::move(corpus), std::move(queries), std::move(qrels), {std::move(t)}};
}

PlantedDataset two_cluster(std::uint64_t seed) {
  constexpr std::size_t D = 16, P = 5, nA = 3, nB = 30, nBg = 167;
  Gaussian g(seed);
  Vec q(D, 0.0);
  q[0] = 1.0;
  Vec neg_q(D, 0.0);
  neg_q[0] = -1.0;
  Builder b{D, {}, {}, {}, {}, 0};
  auto passages_around = [&](const Vec& center) {
    std::vector<Vec> ps;
    for (std::size_t p = 0; p < P; ++p) ps.push_back(add(center, gaussian_vec(g, D), 0.05));
    return ps;
  };
  for (std::size_t i = 0; i < nA; ++i) b.add_item(passages_around(add(q, gaussian_vec(g, D), 0.1)), 3.0, 1);
  for (std::size_t i = 0; i < nB; ++i) b.add_item(passages_around(add(neg_q, gaussian_vec(g, D), 0.1)), 3.0, 1);
  for (std::size_t i = 0; i < nBg; ++i) {
    Vec c = unit_vec(g, D);
    const double r = 0.5 + g.uniform();
    for (auto& x : c) x *= r;
    b.add_item(passages_around(c), 0.0, 0);
  }
  const std::size_t rows = b.rows();
  auto corpus = make_corpus(rows, D, std::move(b.data), b.item_of_row);
  corpus::Qrels qrels;
  qrels["q000"] = std::move(b.grades);
  return PlantedDataset{std::move(corpus), {make_query("q000", q)}, std::move(qrels), {std::move(b.truth)}};
}

AugmentationFixture augmentation(std::uint64_t seed) {
  constexpr std::size_t D = 16, P = 5, nB = 20, nBg = 175, d = 4;
  constexpr double shell = 2.5, ball = 1.6, sep = 1.2, common = 4.0, noise = 0.05;
  Gaussian g(seed);
  // Every point shares a large common-mode offset along axis 0; the
  // geometry that matters lives in axes 1..d.
  auto lift = [&](const Vec& z) {
    Vec v(D, 0.0);
    v[0] = common;
    for (std::size_t i = 0; i < d; ++i) v[1 + i] = z[i];
    return v;
  };
  auto passages_around = [&](const Vec& center) {
    std::vector<Vec> ps;
    for (std::size_t p = 0; p < P; ++p) {
      Vec n = gaussian_vec(g, D, noise);
      n[0] = 0.0;
      ps.push_back(add(center, n));
    }
    return ps;
  };
  Vec qz(d, 0.0);
  qz[0] = shell;
  const Vec q = lift(qz);

  std::vector<Vec> centers;
  std::size_t attempts = 0;
  while (centers.size() < nB) {
    if (++attempts > 1000000) throw ConfigError("augmentation fixture: could not place relevant items");
    Vec c = unit_vec(g, d);
    const double r = ball * std::pow(g.uniform(), 1.0 / static_cast<double>(d));
    for (auto& x : c) x *= r;
    bool ok = true;
    for (const auto& o : centers) {
      Vec diff = add(c, o, -1.0);
      if (norm(diff) < sep) {
        ok = false;
        break;
      }
    }
    if (ok) centers.push_back(c);
  }

  Builder b{D, {}, {}, {}, {}, 0};
  std::vector<std::size_t> relevant_items;
  for (const auto& c : centers) relevant_items.push_back(b.add_item(passages_around(lift(c)), 3.0, 3));
  std::vector<std::size_t> background_items;
  for (std::size_t i = 0; i < nBg; ++i) {
    Vec z = unit_vec(g, d);
    for (auto& x : z) x *= shell;
    background_items.push_back(b.add_item(passages_around(lift(z)), 0.0, 0));
  }
  const std::size_t rows = b.rows();
  auto first_row = [&](std::size_t item) { return static_cast<std::uint32_t>(item * P); };

  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[g.below(i)]);
  };
  shuffle(relevant_items);
  shuffle(background_items);

  AugmentationFixture fx{PlantedDataset{make_corpus(rows, D, std::move(b.data), b.item_of_row),
                                        {make_query("q000", q)},
                                        {},
                                        {std::move(b.truth)}},
                         {},
                         {}};
  fx.data.qrels["q000"] = std::move(b.grades);
  for (std::size_t item : relevant_items) fx.high_rows.push_back(first_row(item));
  for (std::size_t item : background_items) fx.low_rows.push_back(first_row(item));
  return fx;
}

void write_dataset(const PlantedDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("passages.jsonl");
    corpus::write_passages(out, data.corpus.passages());
  }
  corpus::write_embeddings(dir / "embeddings.emb", data.corpus.embeddings());
  std::vector<corpus::QueryRecord> records;
  std::vector<float> qdata;
  for (const auto& q : data.queries) {
    records.push_back({q.query_id, q.text});
    qdata.insert(qdata.end(), q.embedding.begin(), q.embedding.end());
  }
  {
    auto out = open("queries.jsonl");
    corpus::write_query_records(out, records);
  }
  corpus::write_embeddings(dir / "queries.emb",
                           corpus::EmbeddingMatrix(data.queries.size(), data.corpus.dim(), std::move(qdata)));
  auto out = open("qrels.txt");
  corpus::write_qrels(out, data.qrels);
}

}  // namespace gprllm::fixtures
