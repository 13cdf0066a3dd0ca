#include "gprllm/eval.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "gprllm/error.hpp"
#include "json.hpp"

namespace gprllm::eval {

namespace {

const std::map<std::string, int>* grades_for(const corpus::Qrels& qrels, const std::string& query_id) {
  auto it = qrels.find(query_id);
  return it == qrels.end() ? nullptr : &it->second;
}

int grade_of(const std::map<std::string, int>* grades, const std::string& item_id) {
  if (!grades) return 0;
  auto it = grades->find(item_id);
  return it == grades->end() ? 0 : it->second;
}

double gain_of(int grade, Gain gain) {
  return gain == Gain::linear ? static_cast<double>(grade) : std::exp2(static_cast<double>(grade)) - 1.0;
}

void check_k(std::size_t k) {
  if (k < 1) throw ConfigError("metric cutoff k must be >= 1");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Gain parse_gain(std::string_view name) {
  if (name == "linear") return Gain::linear;
  if (name == "exp") return Gain::exp;
  throw ConfigError("unknown gain '" + std::string(name) + "' (expected linear or exp)");
}

double precision_at_k(const ranker::RankedList& run, const corpus::Qrels& qrels, std::size_t k) {
  check_k(k);
  const auto* grades = grades_for(qrels, run.query_id);
  std::size_t hits = 0;
  const std::size_t n = std::min(k, run.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (grade_of(grades, run.entries[i].item_id) > 0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double ndcg_at_k(const ranker::RankedList& run, const corpus::Qrels& qrels, std::size_t k, Gain gain) {
  check_k(k);
  const auto* grades = grades_for(qrels, run.query_id);
  if (!grades) return 0.0;
  std::vector<int> ideal;
  for (const auto& [item, g] : *grades) {
    if (g > 0) ideal.push_back(g);
  }
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += gain_of(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  if (idcg == 0.0) return 0.0;
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, run.entries.size()); ++i) {
    dcg += gain_of(grade_of(grades, run.entries[i].item_id), gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

std::string MetricSpec::name() const {
  return (kind == MetricKind::precision ? "P@" : "NDCG@") + std::to_string(k);
}

MetricSpec parse_metric(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const auto at = lower.find('@');
  if (at == std::string::npos) throw ConfigError("metric '" + std::string(text) + "' needs the form NAME@k");
  const std::string name = lower.substr(0, at);
  MetricSpec spec;
  if (name == "p" || name == "precision") {
    spec.kind = MetricKind::precision;
  } else if (name == "ndcg" || name == "n") {
    spec.kind = MetricKind::ndcg;
  } else {
    throw ConfigError("unknown metric '" + std::string(text) + "'");
  }
  try {
    std::size_t used = 0;
    spec.k = std::stoul(lower.substr(at + 1), &used);
    if (used != lower.size() - at - 1) throw std::invalid_argument("k");
  } catch (const std::exception&) {
    throw ConfigError("metric '" + std::string(text) + "' has a bad cutoff");
  }
  check_k(spec.k);
  return spec;
}

std::vector<MetricSpec> default_metrics() {
  return {{MetricKind::precision, 10}, {MetricKind::precision, 30}, {MetricKind::ndcg, 10}, {MetricKind::ndcg, 30}};
}

std::map<std::string, double> MetricReport::column(std::size_t m) const {
  std::map<std::string, double> out;
  for (const auto& q : per_query) out[q.query_id] = q.values.at(m);
  return out;
}

MetricReport evaluate(std::span<const ranker::RankedList> runs, const corpus::Qrels& qrels,
                      std::span<const MetricSpec> metrics, Gain gain) {
  MetricReport report;
  report.metrics.assign(metrics.begin(), metrics.end());
  report.means.assign(metrics.size(), 0.0);
  for (const auto& run : runs) {
    if (!qrels.count(run.query_id)) {
      report.warnings.push_back("query '" + run.query_id + "' has no qrels; its metrics are 0");
    }
    QueryMetrics row{run.query_id, {}};
    for (const auto& m : metrics) {
      row.values.push_back(m.kind == MetricKind::precision ? precision_at_k(run, qrels, m.k)
                                                           : ndcg_at_k(run, qrels, m.k, gain));
    }
    for (std::size_t i = 0; i < metrics.size(); ++i) report.means[i] += row.values[i];
    report.per_query.push_back(std::move(row));
  }
  if (!report.per_query.empty()) {
    for (auto& m : report.means) m /= static_cast<double>(report.per_query.size());
  }
  return report;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataError("paired t-test: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " values");
  }
  if (a.size() < 2) throw DataError("paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  bool all_zero = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) all_zero = false;
    ss += (d - mean) * (d - mean);
  }
  TTestResult r;
  r.n = n;
  if (all_zero) return r;
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) {
    r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

std::vector<MetricComparison> compare(const MetricReport& a, const MetricReport& b) {
  std::vector<MetricComparison> out;
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    const std::string name = a.metrics[i].name();
    std::size_t j = 0;
    while (j < b.metrics.size() && b.metrics[j].name() != name) ++j;
    if (j == b.metrics.size()) continue;
    const auto ca = a.column(i);
    const auto cb = b.column(j);
    std::vector<double> va, vb;
    for (const auto& [qid, v] : ca) {
      auto it = cb.find(qid);
      if (it == cb.end()) continue;
      va.push_back(v);
      vb.push_back(it->second);
    }
    MetricComparison c;
    c.metric = name;
    for (double v : va) c.mean_a += v;
    for (double v : vb) c.mean_b += v;
    if (!va.empty()) {
      c.mean_a /= static_cast<double>(va.size());
      c.mean_b /= static_cast<double>(vb.size());
    }
    c.test = paired_t_test(va, vb);
    out.push_back(c);
  }
  return out;
}

void write_metric_table(std::ostream& out, const MetricReport& report) {
  std::size_t width = 8;
  for (const auto& q : report.per_query) width = std::max(width, q.query_id.size() + 2);
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  out << pad("query", width);
  for (const auto& m : report.metrics) out << pad(m.name(), 10);
  out << '\n';
  for (const auto& q : report.per_query) {
    out << pad(q.query_id, width);
    for (double v : q.values) out << pad(fixed(v, 4), 10);
    out << '\n';
  }
  out << pad("mean", width);
  for (double v : report.means) out << pad(fixed(v, 4), 10);
  out << "\nqueries: " << report.query_count() << '\n';
}

void write_metric_jsonl(std::ostream& out, const MetricReport& report) {
  for (const auto& q : report.per_query) {
    nlohmann::ordered_json rec;
    rec["query_id"] = q.query_id;
    for (std::size_t i = 0; i < report.metrics.size(); ++i) rec[report.metrics[i].name()] = q.values[i];
    out << rec.dump() << '\n';
  }
  nlohmann::ordered_json all;
  all["query_id"] = "all";
  for (std::size_t i = 0; i < report.metrics.size(); ++i) all[report.metrics[i].name()] = report.means[i];
  all["queries"] = report.query_count();
  out << all.dump() << '\n';
}

void write_comparison_table(std::ostream& out, std::span<const MetricComparison> rows) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s %10s %10s %5s\n", "metric", "mean_a", "mean_b", "t", "p", "n");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %10.4f %10.4f %10.4f %10.4g %5zu\n", r.metric.c_str(), r.mean_a,
                  r.mean_b, r.test.t, r.test.p, r.test.n);
    out << buf;
  }
}

}  // namespace gprllm::eval
