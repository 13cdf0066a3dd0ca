#include "gprllm/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "gprllm/error.hpp"
#include "gprllm/fixtures.hpp"

namespace gprllm::scenarios {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

pipeline::StageTimings median_of(std::vector<pipeline::StageTimings> runs) {
  auto med = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.*field);
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  pipeline::StageTimings m;
  m.retrieve = med(&pipeline::StageTimings::retrieve);
  m.sample = med(&pipeline::StageTimings::sample);
  m.judge = med(&pipeline::StageTimings::judge);
  m.fit = med(&pipeline::StageTimings::fit);
  m.score = med(&pipeline::StageTimings::score);
  m.aggregate = med(&pipeline::StageTimings::aggregate);
  m.total = med(&pipeline::StageTimings::total);
  return m;
}

double ndcg10(const ranker::RankedList& list, const corpus::Qrels& qrels) { return eval::ndcg_at_k(list, qrels, 10); }

ranker::RankedList rank_scores(const std::string& qid, std::span<const double> scores, const corpus::Corpus& corpus,
                               const ranker::AggregationConfig& agg) {
  return ranker::rank_items(qid, ranker::aggregate_items(scores, corpus, agg), agg);
}

std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

pipeline::RunConfig synthetic_run_config(gpr::KernelKind kernel) {
  pipeline::RunConfig cfg;
  cfg.judge.backend = judge::Backend::synthetic;
  cfg.gpr.kernel = kernel;
  return cfg;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

Scenario parse_scenario(std::string_view name) {
  if (name == "latency") return Scenario::latency;
  if (name == "multimodal") return Scenario::multimodal;
  if (name == "augmentation") return Scenario::augmentation;
  if (name == "sensitivity") return Scenario::sensitivity;
  throw ConfigError("unknown bench scenario '" + std::string(name) + "'");
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("spearman needs two equal-length series of >= 2 values");
  return pearson(average_ranks(x), average_ranks(y));
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("slope needs two equal-length series of >= 2 values");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

LatencyReport run_latency(const LatencyOptions& opts) {
  const auto data = fixtures::random_corpus(opts.passages, opts.dim, 10, opts.seed);
  auto cfg = synthetic_run_config(opts.kernel);
  cfg.sampler.epsilon = opts.epsilon;
  cfg.sampler.budget = opts.budget;
  cfg.sampler.eta = std::max<std::size_t>(100, 2 * opts.budget);
  cfg.seed = opts.seed;
  cfg.aggregation.cutoff_K = 100;
  LatencyReport report;
  report.options = opts;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, opts.repeats); ++r) {
    // Fresh judge each repeat so no judgment is served from memory.
    judge::Judge judge(cfg.judge, judge::make_backend(cfg.judge, data.corpus), nullptr);
    const auto result = pipeline::process_query(data.queries[0], data.corpus, judge, cfg);
    report.runs.push_back(result.trace.seconds);
  }
  report.median = median_of(report.runs);
  return report;
}

void print(std::ostream& out, const LatencyReport& r) {
  const double N = static_cast<double>(r.options.passages), D = static_cast<double>(r.options.dim),
               R = static_cast<double>(r.options.budget);
  char buf[200];
  std::snprintf(buf, sizeof buf, "latency  N=%zu D=%zu R=%zu kernel=%s repeats=%zu (median seconds)\n",
                r.options.passages, r.options.dim, r.options.budget,
                std::string(gpr::to_string(r.options.kernel)).c_str(), r.runs.size());
  out << buf;
  out << "total cost O(ND + R*C_LLM + R^2 D + R^3 + NRD)\n";
  auto row = [&](const char* stage, const char* term, double work, double secs) {
    if (work > 0) {
      std::snprintf(buf, sizeof buf, "  %-10s %-14s %12.3e %10.4f\n", stage, term, work, secs);
    } else {
      std::snprintf(buf, sizeof buf, "  %-10s %-14s %12s %10.4f\n", stage, term, "-", secs);
    }
    out << buf;
  };
  std::snprintf(buf, sizeof buf, "  %-10s %-14s %12s %10s\n", "stage", "term", "N/R/D value", "seconds");
  out << buf;
  row("retrieve", "O(ND)", N * D, r.median.retrieve);
  row("sample", "O(R)", R, r.median.sample);
  row("judge", "O(R*C_LLM)", 0, r.median.judge);
  row("fit", "O(R^2 D+R^3)", R * R * D + R * R * R, r.median.fit);
  row("score", "O(NRD)", N * R * D, r.median.score);
  row("aggregate", "O(N log T)", 0, r.median.aggregate);
  std::snprintf(buf, sizeof buf, "  %-10s %-14s %12s %10.4f\n  %-10s %-14s %12s %10.4f\n", "total", "", "",
                r.median.total, "non-judge", "", "", r.non_judge_seconds());
  out << buf;
}

ScalingReport run_scaling(std::span<const std::size_t> sizes, std::size_t dim, std::size_t budget,
                          std::size_t repeats, std::uint64_t seed) {
  if (sizes.empty()) throw ConfigError("scaling needs at least one corpus size");
  const std::size_t n_max = *std::max_element(sizes.begin(), sizes.end());
  const auto data = fixtures::random_corpus(n_max, dim, 10, seed);
  const auto& emb = data.corpus.embeddings();

  std::vector<std::uint32_t> rows(budget);
  std::iota(rows.begin(), rows.end(), 0u);
  std::vector<double> y;
  for (auto r : rows) y.push_back(data.truth[0][r]);
  const auto q = gpr::to_vector(data.queries[0].embedding);
  const auto X = gpr::gather_rows(emb, rows);
  const auto model = gpr::fit(gpr::KernelSpec::rbf(std::sqrt(static_cast<double>(dim))), 1e-3, q, 3.0, X,
                              Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));

  ScalingReport report;
  for (std::size_t n : sizes) {
    const auto all = emb.data();
    corpus::EmbeddingMatrix sub(n, dim, std::vector<float>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n * dim)));
    double best = std::numeric_limits<double>::infinity();
    double sink = 0.0;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, repeats); ++r) {
      const auto t0 = Clock::now();
      const auto mean = gpr::predict_mean(model, sub);
      best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
      sink += mean(0);
    }
    if (!std::isfinite(sink)) throw DataError("scaling: non-finite posterior mean");
    report.passages.push_back(static_cast<double>(n));
    report.seconds.push_back(best);
  }
  report.slope = report.passages.size() >= 2 ? loglog_slope(report.passages, report.seconds) : 0.0;
  return report;
}

void print(std::ostream& out, const ScalingReport& r) {
  char buf[128];
  out << "scaling  posterior-mean scoring, best of repeats\n";
  for (std::size_t i = 0; i < r.passages.size(); ++i) {
    std::snprintf(buf, sizeof buf, "  N=%-8.0f %10.5f s\n", r.passages[i], r.seconds[i]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  log-log slope %.3f\n", r.slope);
  out << buf;
}

MultimodalReport run_multimodal(std::size_t seeds) {
  MultimodalReport report;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto data = fixtures::two_cluster(s);
    const auto& query = data.queries[0];
    std::array<double, 4> row{};

    auto cfg = synthetic_run_config(gpr::KernelKind::rbf);
    cfg.sampler.epsilon = 0.3;
    cfg.sampler.budget = 50;
    cfg.sampler.eta = 0;
    cfg.seed = s;

    const auto dr = retrieval::score_all(query.embedding, data.corpus.embeddings(), retrieval::Similarity::dot);
    row[0] = ndcg10(rank_scores(query.query_id, dr, data.corpus, cfg.aggregation), data.qrels);

    const gpr::KernelKind kinds[] = {gpr::KernelKind::dot, gpr::KernelKind::cosine, gpr::KernelKind::rbf};
    for (std::size_t k = 0; k < 3; ++k) {
      cfg.gpr.kernel = kinds[k];
      judge::Judge judge(cfg.judge, judge::make_backend(cfg.judge, data.corpus, fixtures::truth_oracle(data)), nullptr);
      const auto result = pipeline::process_query(query, data.corpus, judge, cfg);
      row[k + 1] = ndcg10(result.ranking, data.qrels);
    }
    report.per_seed.push_back(row);
    for (std::size_t m = 0; m < 4; ++m) report.mean[m] += row[m] / static_cast<double>(seeds);
  }
  return report;
}

void print(std::ostream& out, const MultimodalReport& r) {
  char buf[160];
  out << "multimodal  two-cluster surface, NDCG@10\n";
  std::snprintf(buf, sizeof buf, "  %-6s %8s %8s %8s %8s\n", "seed", "dr", "dot", "cosine", "rbf");
  out << buf;
  for (std::size_t s = 0; s < r.per_seed.size(); ++s) {
    const auto& v = r.per_seed[s];
    std::snprintf(buf, sizeof buf, "  %-6zu %8.4f %8.4f %8.4f %8.4f\n", s, v[0], v[1], v[2], v[3]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  %-6s %8.4f %8.4f %8.4f %8.4f\n", "mean", r.mean[0], r.mean[1], r.mean[2],
                r.mean[3]);
  out << buf;
}

AugmentationReport run_augmentation(std::size_t queries) {
  constexpr std::size_t kMaxAdds = 20;
  AugmentationReport report;
  report.queries = queries;
  for (auto& v : report.high) v.assign(kMaxAdds + 1, 0.0);
  for (auto& v : report.low) v.assign(kMaxAdds + 1, 0.0);
  const gpr::KernelKind kinds[] = {gpr::KernelKind::dot, gpr::KernelKind::cosine, gpr::KernelKind::rbf};
  const ranker::AggregationConfig agg;

  for (std::size_t s = 0; s < queries; ++s) {
    const auto fx = fixtures::augmentation(s);
    const auto& data = fx.data;
    const auto& query = data.queries[0];
    const auto ranking = retrieval::rank(query.embedding, data.corpus.embeddings(), retrieval::Similarity::dot);
    const std::vector<std::uint32_t> base(ranking.order.begin(),
                                          ranking.order.begin() + static_cast<std::ptrdiff_t>(report.base));
    if (fx.high_rows.size() < kMaxAdds) throw DataError("augmentation fixture has too few relevant items");

    auto curve_point = [&](const std::vector<std::uint32_t>& adds, std::size_t k, std::size_t kernel) {
      std::vector<std::uint32_t> rows = base;
      std::vector<std::uint32_t> extra;
      for (auto r : adds) {
        if (extra.size() == k) break;
        if (std::find(base.begin(), base.end(), r) == base.end()) extra.push_back(r);
      }
      rows.insert(rows.end(), extra.begin(), extra.end());
      std::vector<double> y;
      for (auto r : rows) y.push_back(data.truth[0][r]);
      pipeline::GprConfig g;
      g.kernel = kinds[kernel];
      const auto fit = pipeline::fit_and_score(query.embedding, 3.0, data.corpus, rows, y, g);
      return ndcg10(rank_scores(query.query_id, as_span(fit.mean), data.corpus, agg), data.qrels);
    };
    for (std::size_t kernel = 0; kernel < 3; ++kernel) {
      for (std::size_t k = 0; k <= kMaxAdds; ++k) {
        report.high[kernel][k] += curve_point(fx.high_rows, k, kernel) / static_cast<double>(queries);
        report.low[kernel][k] += curve_point(fx.low_rows, k, kernel) / static_cast<double>(queries);
      }
    }
  }
  std::vector<double> ks;
  for (std::size_t k = 1; k <= kMaxAdds; ++k) ks.push_back(static_cast<double>(k));
  for (std::size_t kernel = 0; kernel < 3; ++kernel) {
    const auto& h = report.high[kernel];
    report.rho_high[kernel] = spearman(ks, std::span<const double>(h).subspan(1));
    for (std::size_t k = 0; k <= kMaxAdds; ++k) {
      report.max_delta_high[kernel] = std::max(report.max_delta_high[kernel], std::abs(h[k] - h[0]));
      report.max_delta_low[kernel] =
          std::max(report.max_delta_low[kernel], std::abs(report.low[kernel][k] - report.low[kernel][0]));
    }
  }
  return report;
}

void print(std::ostream& out, const AugmentationReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "augmentation  greedy base %zu, %zu queries, mean NDCG@10 after k adds\n", r.base,
                r.queries);
  out << buf;
  for (const char* kind : {"high", "low"}) {
    const auto& curves = std::string_view(kind) == "high" ? r.high : r.low;
    out << "  " << kind << "-relevance adds\n";
    std::snprintf(buf, sizeof buf, "    %-4s %8s %8s %8s\n", "k", "dot", "cosine", "rbf");
    out << buf;
    for (std::size_t k = 0; k < curves[0].size(); ++k) {
      std::snprintf(buf, sizeof buf, "    %-4zu %8.4f %8.4f %8.4f\n", k, curves[0][k], curves[1][k], curves[2][k]);
      out << buf;
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    std::snprintf(buf, sizeof buf, "  %-7s high: spearman %.3f  max|delta| %.4f   low: max|delta| %.4f\n",
                  std::string(kKernelNames[i]).c_str(), r.rho_high[i], r.max_delta_high[i], r.max_delta_low[i]);
    out << buf;
  }
}

std::vector<SensitivityRow> run_sensitivity(std::size_t seeds) {
  std::vector<fixtures::PlantedDataset> data;
  for (std::size_t s = 0; s < seeds; ++s) data.push_back(fixtures::two_cluster(s));

  auto mean_ndcg = [&](const pipeline::RunConfig& cfg) {
    double acc = 0.0;
    for (std::size_t s = 0; s < data.size(); ++s) {
      auto c = cfg;
      c.seed = s;
      judge::Judge judge(c.judge, judge::make_backend(c.judge, data[s].corpus, fixtures::truth_oracle(data[s])),
                         nullptr);
      acc += ndcg10(pipeline::process_query(data[s].queries[0], data[s].corpus, judge, c).ranking, data[s].qrels);
    }
    return acc / static_cast<double>(data.size());
  };
  auto base = synthetic_run_config(gpr::KernelKind::rbf);
  base.sampler.epsilon = 0.3;
  base.sampler.budget = 50;
  base.sampler.eta = 0;

  std::vector<SensitivityRow> rows;
  for (double a : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    auto c = base;
    c.gpr.alpha = a;
    rows.push_back({"alpha", short_num(a), mean_ndcg(c)});
  }
  for (double ell : {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0}) {
    auto c = base;
    c.gpr.optimize_ell = false;
    c.gpr.ell_init = ell;
    rows.push_back({"ell", short_num(ell), mean_ndcg(c)});
  }
  {
    rows.push_back({"ell", "optimized", mean_ndcg(base)});
  }
  for (double scale : {0.1, 1.0, 10.0}) {
    auto c = base;
    c.judge.score_scale = scale;
    rows.push_back({"score-scale", short_num(scale), mean_ndcg(c)});
  }
  for (std::size_t t : {1, 3, 5, 10, 25, 50}) {
    for (auto phi : {ranker::Phi::mean, ranker::Phi::max}) {
      auto c = base;
      c.aggregation.top_T = t;
      c.aggregation.phi = phi;
      rows.push_back({"top-t/" + std::string(ranker::to_string(phi)), std::to_string(t), mean_ndcg(c)});
    }
  }
  return rows;
}

void print(std::ostream& out, std::span<const SensitivityRow> rows) {
  char buf[128];
  out << "sensitivity  rbf on the two-cluster surface, mean NDCG@10\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "  %-14s %-10s %8.4f\n", r.parameter.c_str(), r.value.c_str(), r.ndcg10);
    out << buf;
  }
}

}  // namespace gprllm::scenarios
