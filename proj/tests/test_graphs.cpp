#include <doctest.h>

#include <cmath>

#include "clufef/graphs.hpp"
#include "oracles.hpp"

using namespace clufef;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected clufef::Error");
  return ErrorCode::InvalidArgument;
}

DataMatrix line_points(std::initializer_list<double> xs) {
  Matrix X(1, static_cast<Index>(xs.size()));
  Index j = 0;
  for (double x : xs) X(0, j++) = x;
  return DataMatrix(X);
}

std::vector<int> balanced_labels(Index n, int classes) {
  std::vector<int> labels;
  for (Index i = 0; i < n; ++i) labels.push_back(static_cast<int>(i % classes) + 1);
  return labels;
}

}  // namespace

TEST_CASE("neighbor index on three 1-D points") {
  DataMatrix X = line_points({0, 1, 10});
  NeighborIndex idx = build_neighbor_index(X, 1);
  CHECK(idx.neighbors[0] == std::vector<Index>{1});
  CHECK(idx.neighbors[1] == std::vector<Index>{0});
  CHECK(idx.neighbors[2] == std::vector<Index>{1});
  CHECK_FALSE(idx.has_thermal());

  LabelVector labels({1, 1, 2}, 2);
  CHECK(code_of([&] { build_neighbor_index(X, 1, &labels); }) == ErrorCode::KTooLarge);
  CHECK(code_of([&] { build_neighbor_index(X, 3); }) == ErrorCode::KTooLarge);
  CHECK(code_of([&] { build_neighbor_index(X, 0); }) == ErrorCode::KTooLarge);

  LabelVector pairs({1, 1, 2, 2}, 2);
  NeighborIndex sup = build_neighbor_index(line_points({0, 1, 10, 11}), 1, &pairs);
  CHECK(sup.neighbors[0] == std::vector<Index>{1});
  CHECK(sup.neighbors[1] == std::vector<Index>{0});
  CHECK(sup.neighbors[2] == std::vector<Index>{3});
}

TEST_CASE("neighbor ties are broken by ascending index") {
  NeighborIndex idx = build_neighbor_index(line_points({0, -1, 1, 2}), 2);
  CHECK(idx.neighbors[0] == std::vector<Index>{1, 2});
  NeighborIndex dup = build_neighbor_index(line_points({5, 5, 5, 5}), 3);
  CHECK(dup.neighbors[2] == std::vector<Index>{0, 1, 3});
}

TEST_CASE("neighbor index matches exhaustive sort") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix X = oracle::random_matrix(3, 10, rng);
    NeighborIndex idx = build_neighbor_index(DataMatrix(X), 3);
    NeighborIndex full = build_neighbor_index(DataMatrix(X), 3);
    for (Index j = 0; j < 10; ++j) {
      CHECK(idx.neighbors[j] == oracle::knn(X, j, 3));
      CHECK(std::abs(full.seventh_distance[j] - oracle::seventh_distance(X, j)) < 1e-14);
    }
    std::vector<int> labels = balanced_labels(10, 2);
    LabelVector lv(labels, 2);
    NeighborIndex sup = build_neighbor_index(DataMatrix(X), 3, &lv);
    for (Index j = 0; j < 10; ++j) {
      CHECK(sup.neighbors[j] == oracle::knn(X, j, 3, &labels));
      // The thermal distance ignores classes.
      CHECK(sup.seventh_distance[j] == full.seventh_distance[j]);
    }
  }
}

TEST_CASE("thermal weight") {
  DataMatrix X = line_points({0, 1, 2, 3, 4, 5, 6, 7, 8});
  NeighborIndex idx = build_neighbor_index(X, 1);
  // Brute force: r7(0) = 7 (point 7), r7(1) = 6 (point 7), t = 42.
  const Matrix& raw = X.values();
  const double t = oracle::seventh_distance(raw, 0) * oracle::seventh_distance(raw, 1);
  CHECK(t == doctest::Approx(42.0).epsilon(1e-15));
  CHECK(thermal_weight(X, idx, 0, 1) == doctest::Approx(std::exp(-1.0 / 42.0)).epsilon(1e-15));
  CHECK(thermal_weight(X, idx, 0, 1) == doctest::Approx(0.976471686652243).epsilon(1e-14));
  CHECK(thermal_weight(X, idx, 0, 1) == thermal_weight(X, idx, 1, 0));

  for (Index i = 0; i < 9; ++i) {
    for (Index j = 0; j < 9; ++j) {
      if (i == j) continue;
      double w = thermal_weight(X, idx, i, j);
      CHECK(w > 0.0);
      CHECK(w <= 1.0);
    }
  }

  DataMatrix dup = line_points({0, 0, 1, 2, 3, 4, 5, 6, 7});
  NeighborIndex didx = build_neighbor_index(dup, 1);
  CHECK(thermal_weight(dup, didx, 0, 1) == 1.0);

  DataMatrix seven = line_points({0, 1, 2, 3, 4, 5, 6});
  NeighborIndex sidx = build_neighbor_index(seven, 1);
  CHECK(code_of([&] { thermal_weight(seven, sidx, 0, 1); }) == ErrorCode::TooFewSamplesForThermal);

  DataMatrix flat = line_points({3, 3, 3, 3, 3, 3, 3, 3, 9});
  NeighborIndex fidx = build_neighbor_index(flat, 1);
  CHECK(code_of([&] { thermal_weight(flat, fidx, 0, 1); }) == ErrorCode::ZeroThermal);
  CHECK(code_of([&] { build_u_cl(flat, 1); }) == ErrorCode::ZeroThermal);
}

TEST_CASE("u-CL with k = n-1 has no negatives") {
  std::mt19937_64 rng(2);
  DataMatrix X(oracle::random_matrix(4, 9, rng));
  ContrastiveGraphPair g = build_u_cl(X, 8);
  CHECK(g.s_neg.isZero(0.0));
  for (Index i = 0; i < 9; ++i) {
    for (Index j = 0; j < 9; ++j) CHECK((i == j) == (g.s_pos(i, j) == 0.0));
  }
  CHECK(code_of([&] { build_u_cl(DataMatrix(oracle::random_matrix(4, 7, rng)), 2); }) ==
        ErrorCode::TooFewSamplesForThermal);
}

TEST_CASE("u-CL positives stay inside well separated clusters") {
  std::mt19937_64 rng(3);
  Matrix X(2, 30);
  for (Index j = 0; j < 30; ++j) {
    X.col(j) = oracle::random_matrix(2, 1, rng, 0.5);
    X(0, j) += 100.0 * static_cast<double>(j / 10);
  }
  ContrastiveGraphPair g = build_u_cl(DataMatrix(X), 2);
  auto [pos, neg] = oracle::knn_graph(X, 2, nullptr);
  CHECK((g.s_pos - pos).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(g.s_neg == neg);
  for (Index i = 0; i < 30; ++i) {
    for (Index j = 0; j < 30; ++j) {
      if (i / 10 != j / 10) CHECK(g.s_pos(i, j) == 0.0);
    }
  }
}

TEST_CASE("u-CL and s-CL2 match pair enumeration of the definitions") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix X = oracle::random_matrix(3, 12, rng);
    ContrastiveGraphPair u = build_u_cl(DataMatrix(X), 3);
    auto [pos, neg] = oracle::knn_graph(X, 3, nullptr);
    CHECK((u.s_pos - pos).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(u.s_neg == neg);
    CHECK(oracle::partition_violation(u.s_pos, u.s_neg).empty());

    std::vector<int> labels = balanced_labels(12, 3);
    ContrastiveGraphPair s = build_s_cl2(DataMatrix(X), LabelVector(labels, 3), 2);
    auto [spos, sneg] = oracle::knn_graph(X, 2, &labels);
    CHECK((s.s_pos - spos).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(s.s_neg == sneg);
  }
}

TEST_CASE("s-CL1 graphs") {
  ContrastiveGraphPair g = build_s_cl1(LabelVector({1, 1, 2}, 2));
  Matrix pos(3, 3), neg(3, 3);
  pos << 0, 1, 0, 1, 0, 0, 0, 0, 0;
  neg << 0, 0, 1, 0, 0, 1, 1, 1, 0;
  CHECK(g.s_pos == pos);
  CHECK(g.s_neg == neg);

  ContrastiveGraphPair same = build_s_cl1(LabelVector({1, 1, 1, 1}, 1));
  CHECK(same.s_neg.isZero(0.0));

  ContrastiveGraphPair distinct = build_s_cl1(LabelVector({1, 2, 3, 4}, 4));
  CHECK(distinct.s_pos.isZero(0.0));
  CHECK(distinct.s_neg == Matrix::Ones(4, 4) - Matrix::Identity(4, 4));
}

TEST_CASE("s-CL2 on paired points") {
  // Four points {0, 1, 100, 101} do not admit a 7th neighbour.
  LabelVector four({1, 1, 2, 2}, 2);
  CHECK(code_of([&] { build_s_cl2(line_points({0, 1, 100, 101}), four, 1); }) ==
        ErrorCode::TooFewSamplesForThermal);

  // Same structure with four pairs: positives are exactly the pairs.
  DataMatrix X = line_points({0, 1, 10, 11, 100, 101, 110, 111});
  LabelVector labels({1, 1, 1, 1, 2, 2, 2, 2}, 2);
  ContrastiveGraphPair g = build_s_cl2(X, labels, 1);
  for (Index i = 0; i < 8; ++i) {
    for (Index j = 0; j < 8; ++j) {
      const bool paired = i != j && i / 2 == j / 2;
      CHECK((g.s_pos(i, j) > 0.0) == paired);
      if (labels[i] != labels[j]) CHECK(g.s_neg(i, j) == 1.0);
    }
  }
  CHECK(code_of([&] { build_s_cl2(X, labels, 4); }) == ErrorCode::KTooLarge);
}

TEST_CASE("s-CL2 with k = class size - 1 covers s-CL1 within-class support") {
  std::mt19937_64 rng(6);
  Matrix X = oracle::random_matrix(3, 16, rng);
  LabelVector labels(balanced_labels(16, 2), 2);
  ContrastiveGraphPair s2 = build_s_cl2(DataMatrix(X), labels, 7);
  ContrastiveGraphPair s1 = build_s_cl1(labels);
  for (Index i = 0; i < 16; ++i) {
    for (Index j = 0; j < 16; ++j) {
      CHECK((s2.s_pos(i, j) > 0.0) == (s1.s_pos(i, j) > 0.0));
      CHECK((s2.s_neg(i, j) > 0.0) == (s1.s_neg(i, j) > 0.0));
    }
  }
}

TEST_CASE("graph invariants on random instances") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 8 + static_cast<Index>(rng() % 30);
    const int classes = 1 + static_cast<int>(rng() % 3);
    Matrix X = oracle::random_matrix(1 + static_cast<Index>(rng() % 5), n, rng);
    LabelVector labels(balanced_labels(n, classes), classes);
    const Index k = 1 + static_cast<Index>(rng() % std::max<Index>(1, labels.min_class_size() - 1));
    DataMatrix data(X);

    ContrastiveGraphPair u = build_u_cl(data, k);
    ContrastiveGraphPair s1 = build_s_cl1(labels);
    ContrastiveGraphPair s2 = build_s_cl2(data, labels, k);
    for (const auto* g : {&u, &s1, &s2}) {
      CHECK(oracle::partition_violation(g->s_pos, g->s_neg).empty());
    }
    // Cross-class pairs are always s-CL2 negatives.
    CHECK(((s1.s_neg.array() > 0) && (s2.s_neg.array() == 0)).count() == 0);

    // Heat-kernel weights do not change when the data is scaled.
    DataMatrix scaled(3.0 * X);
    CHECK((build_u_cl(scaled, k).s_pos - u.s_pos).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((build_s_cl2(scaled, labels, k).s_pos - s2.s_pos).cwiseAbs().maxCoeff() < 1e-12);

    // Pure function of the inputs.
    CHECK(build_u_cl(data, k).s_pos == u.s_pos);
  }
}

TEST_CASE("build_graph dispatch and method names") {
  CHECK(parse_graph_method("u-cl") == GraphMethod::UCl);
  CHECK(parse_graph_method("S-CL1") == GraphMethod::SCl1);
  CHECK(parse_graph_method("scl2") == GraphMethod::SCl2);
  CHECK(code_of([] { parse_graph_method("lda"); }) == ErrorCode::ConfigError);
  std::mt19937_64 rng(8);
  DataMatrix X(oracle::random_matrix(3, 10, rng));
  CHECK(code_of([&] { build_graph(GraphMethod::SCl1, X, nullptr, 2); }) == ErrorCode::MissingLabels);
  CHECK(build_graph(GraphMethod::UCl, X, nullptr, 2).method == GraphMethod::UCl);
}
