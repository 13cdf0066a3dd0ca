#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. These deliberately avoid Eigen decompositions and the library's own
// helpers: plain loops in long double.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gprllm/corpus.hpp"
#include "gprllm/gpr.hpp"
#include "gprllm/ranker.hpp"

namespace gprllm::oracle {

using LMatrix = std::vector<std::vector<long double>>;

inline long double loop_kernel(gpr::KernelKind kind, double ell, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  long double dot = 0, xx = 0, yy = 0, dist = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const long double a = x[i], b = y[i];
    dot += a * b;
    xx += a * a;
    yy += b * b;
    dist += (a - b) * (a - b);
  }
  switch (kind) {
    case gpr::KernelKind::dot:
      return dot;
    case gpr::KernelKind::cosine:
      if (xx == 0 || yy == 0) return 0;
      return dot / (std::sqrt(xx) * std::sqrt(yy));
    case gpr::KernelKind::rbf:
      return std::exp(-dist / (2.0L * ell * ell));
  }
  return 0;
}

/// Gauss-Jordan inverse with partial pivoting.
inline LMatrix gauss_jordan_inverse(LMatrix a) {
  const std::size_t n = a.size();
  LMatrix inv(n, std::vector<long double>(n, 0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    }
    std::swap(a[c], a[p]);
    std::swap(inv[c], inv[p]);
    const long double d = a[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      const long double f = a[r][c];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

/// log det by Gaussian elimination with partial pivoting (positive definite input).
inline long double log_det(LMatrix a) {
  const std::size_t n = a.size();
  long double acc = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    }
    std::swap(a[c], a[p]);
    acc += std::log(std::fabs(a[c][c]));
    for (std::size_t r = c + 1; r < n; ++r) {
      const long double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
    }
  }
  return acc;
}

struct DenseGp {
  gpr::KernelKind kind;
  double ell;
  std::vector<Eigen::VectorXd> X;  // training points, query first
  std::vector<long double> y;
  double alpha;

  LMatrix gram() const {
    const std::size_t n = X.size();
    LMatrix k(n, std::vector<long double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) k[i][j] = loop_kernel(kind, ell, X[i], X[j]) + (i == j ? alpha : 0.0);
    }
    return k;
  }

  std::vector<long double> weights() const {
    const auto inv = gauss_jordan_inverse(gram());
    std::vector<long double> w(X.size(), 0);
    for (std::size_t i = 0; i < X.size(); ++i) {
      for (std::size_t j = 0; j < X.size(); ++j) w[i] += inv[i][j] * y[j];
    }
    return w;
  }

  /// Mean and variance at each test point through the explicit inverse.
  void posterior(const std::vector<Eigen::VectorXd>& test, std::vector<long double>& mean,
                 std::vector<long double>& var) const {
    const auto inv = gauss_jordan_inverse(gram());
    const std::size_t n = X.size();
    mean.assign(test.size(), 0);
    var.assign(test.size(), 0);
    for (std::size_t t = 0; t < test.size(); ++t) {
      std::vector<long double> ks(n);
      for (std::size_t i = 0; i < n; ++i) ks[i] = loop_kernel(kind, ell, test[t], X[i]);
      long double m = 0, quad = 0;
      for (std::size_t i = 0; i < n; ++i) {
        long double row = 0, wy = 0;
        for (std::size_t j = 0; j < n; ++j) {
          row += inv[i][j] * ks[j];
          wy += inv[i][j] * y[j];
        }
        m += ks[i] * wy;
        quad += ks[i] * row;
      }
      mean[t] = m;
      var[t] = std::max<long double>(0, loop_kernel(kind, ell, test[t], test[t]) - quad);
    }
  }

  long double lml() const {
    const auto k = gram();
    const auto inv = gauss_jordan_inverse(k);
    long double quad = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      for (std::size_t j = 0; j < X.size(); ++j) quad += y[i] * inv[i][j] * y[j];
    }
    const long double pi = 3.14159265358979323846264338327950288L;
    return -0.5L * quad - 0.5L * log_det(k) - 0.5L * X.size() * std::log(2 * pi);
  }
};

/// max_i |a_i - b_i| / max(max_i |b_i|, floor).
template <typename A, typename B>
double normwise_relative_error(const A& a, const B& b, std::size_t n, double floor = 1e-12) {
  long double num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num = std::max<long double>(num, std::fabs(static_cast<long double>(a[i]) - static_cast<long double>(b[i])));
    den = std::max<long double>(den, std::fabs(static_cast<long double>(b[i])));
  }
  return static_cast<double>(num / std::max<long double>(den, floor));
}

// Naive metric definitions written out separately from the library.
inline double naive_precision(const std::vector<std::string>& ranking, const std::map<std::string, int>& grades,
                              std::size_t k) {
  int hits = 0;
  for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
    auto it = grades.find(ranking[i]);
    if (it != grades.end() && it->second > 0) hits = hits + 1;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

inline double naive_ndcg(const std::vector<std::string>& ranking, const std::map<std::string, int>& grades,
                         std::size_t k) {
  double dcg = 0;
  for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
    auto it = grades.find(ranking[i]);
    const int g = it == grades.end() ? 0 : it->second;
    dcg = dcg + g / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> ideal;
  for (const auto& kv : grades) ideal.push_back(kv.second);
  std::sort(ideal.begin(), ideal.end(), [](int a, int b) { return a > b; });
  double idcg = 0;
  for (std::size_t i = 0; i < ideal.size() && i < k; ++i) idcg = idcg + ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  return idcg == 0 ? 0.0 : dcg / idcg;
}

inline ranker::RankedList make_list(const std::string& qid, const std::vector<std::string>& items) {
  ranker::RankedList list{qid, {}};
  for (std::size_t i = 0; i < items.size(); ++i) {
    list.entries.push_back({items[i], static_cast<double>(items.size() - i), i + 1});
  }
  return list;
}

/// Kendall tau-a between two permutations of the same rows.
inline double kendall_tau(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  const std::size_t n = a.size();
  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[b[i]] = i;
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (pos[a[i]] < pos[a[j]]) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  return static_cast<double>(concordant - discordant) / (0.5 * n * (n - 1));
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(gen);
  }
  return m;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("gprllm-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace gprllm::oracle
