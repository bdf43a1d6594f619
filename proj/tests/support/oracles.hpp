// Independent reference implementations used only by tests. Nothing here
// calls into the library's numeric kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;

inline Mat random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

inline Mat random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  Mat q = random_matrix(n, n, rng).householderQr().householderQ();
  return q;
}

inline Mat naive_matmul(const Mat& a, const Mat& b) {
  Mat c = Mat::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

inline double distance(const Mat& X, Eigen::Index a, Eigen::Index b) {
  double s = 0.0;
  for (Eigen::Index f = 0; f < X.rows(); ++f) s += (X(f, a) - X(f, b)) * (X(f, a) - X(f, b));
  return std::sqrt(s);
}

// Every other sample of `j`, sorted by (distance, index).
inline std::vector<Eigen::Index> sorted_others(const Mat& X, Eigen::Index j) {
  std::vector<std::pair<double, Eigen::Index>> all;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    if (i != j) all.emplace_back(distance(X, i, j), i);
  }
  std::sort(all.begin(), all.end());
  std::vector<Eigen::Index> out;
  for (auto& p : all) out.push_back(p.second);
  return out;
}

inline std::vector<Eigen::Index> knn(const Mat& X, Eigen::Index j, Eigen::Index k,
                                     const std::vector<int>* labels = nullptr) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i : sorted_others(X, j)) {
    if (static_cast<Eigen::Index>(out.size()) == k) break;
    if (labels && (*labels)[i] != (*labels)[j]) continue;
    out.push_back(i);
  }
  return out;
}

inline double seventh_distance(const Mat& X, Eigen::Index j) {
  return distance(X, j, sorted_others(X, j).at(6));
}

// Positive/negative graphs straight from the definitions, by pair enumeration.
inline std::pair<Mat, Mat> knn_graph(const Mat& X, Eigen::Index k, const std::vector<int>* labels) {
  const Eigen::Index n = X.cols();
  std::vector<std::vector<Eigen::Index>> nk(n);
  for (Eigen::Index j = 0; j < n; ++j) nk[j] = knn(X, j, k, labels);
  auto in = [&](Eigen::Index a, Eigen::Index b) {
    return std::find(nk[b].begin(), nk[b].end(), a) != nk[b].end();
  };
  Mat pos = Mat::Zero(n, n), neg = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (in(i, j) || in(j, i)) {
        double t = seventh_distance(X, i) * seventh_distance(X, j);
        double d = distance(X, i, j);
        pos(i, j) = std::exp(-d * d / t);
      } else {
        neg(i, j) = 1.0;
      }
    }
  }
  return {pos, neg};
}

// Literal contrastive loss: no shifting, similarities from explicit loops.
// Accumulates in long double so finite differences of it stay accurate well
// below the double-precision noise floor.
inline long double direct_loss(const Mat& P, const Mat& X, const Mat& pos, const Mat& neg, double sigma) {
  const Eigen::Index n = X.cols();
  using LD = long double;
  std::vector<std::vector<LD>> Y(static_cast<std::size_t>(n), std::vector<LD>(static_cast<std::size_t>(P.cols()), 0.0L));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index c = 0; c < P.cols(); ++c) {
      LD s = 0.0L;
      for (Eigen::Index f = 0; f < X.rows(); ++f) s += static_cast<LD>(P(f, c)) * X(f, j);
      Y[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] = s;
    }
  }
  auto sim = [&](Eigen::Index a, Eigen::Index b) {
    const auto& ya = Y[static_cast<std::size_t>(a)];
    const auto& yb = Y[static_cast<std::size_t>(b)];
    LD dot = 0.0L, na = 0.0L, nb = 0.0L;
    for (std::size_t f = 0; f < ya.size(); ++f) {
      dot += ya[f] * yb[f];
      na += ya[f] * ya[f];
      nb += yb[f] * yb[f];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb) * sigma);
  };
  LD total = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    LD num = 0.0L, den = 0.0L;
    for (Eigen::Index j = 0; j < n; ++j) {
      const LD e = std::exp(sim(i, j));
      num += pos(i, j) * e;
      den += (static_cast<LD>(pos(i, j)) + neg(i, j)) * e;
    }
    total += -std::log(num / den);
  }
  return total;
}

// Differences are taken in whatever precision `f` returns.
template <typename F>
Mat central_differences(const Mat& P, F&& f, double h) {
  Mat g(P.rows(), P.cols());
  Mat probe = P;
  for (Eigen::Index c = 0; c < P.cols(); ++c) {
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
      const double saved = probe(r, c);
      probe(r, c) = saved + h;
      const auto up = f(probe);
      probe(r, c) = saved - h;
      const auto down = f(probe);
      probe(r, c) = saved;
      // The probes differ from P by exactly the rounded step.
      const auto step = static_cast<decltype(up)>(saved + h) - static_cast<decltype(up)>(saved - h);
      g(r, c) = static_cast<double>((up - down) / step);
    }
  }
  return g;
}

// Diagnoses the partition invariants; empty string when all hold.
inline std::string partition_violation(const Mat& pos, const Mat& neg) {
  const Eigen::Index n = pos.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pos(i, i) != 0.0 || neg(i, i) != 0.0) return "nonzero diagonal at " + std::to_string(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (pos(i, j) != pos(j, i) || neg(i, j) != neg(j, i)) return "asymmetric at " + std::to_string(i) + "," + std::to_string(j);
      if (i == j) continue;
      const bool p = pos(i, j) > 0.0, q = neg(i, j) > 0.0;
      if (p == q) return "pair " + std::to_string(i) + "," + std::to_string(j) + " not in exactly one graph";
      if (p && pos(i, j) > 1.0) return "positive weight above 1";
      if (q && neg(i, j) != 1.0) return "negative entry not an indicator";
    }
  }
  return {};
}

}  // namespace oracle
