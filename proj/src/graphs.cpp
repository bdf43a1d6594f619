#include "clufef/graphs.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

namespace clufef {

std::string_view to_string(GraphMethod method) {
  switch (method) {
    case GraphMethod::UCl: return "u-cl";
    case GraphMethod::SCl1: return "s-cl1";
    case GraphMethod::SCl2: return "s-cl2";
  }
  return "unknown";
}

GraphMethod parse_graph_method(std::string_view text) {
  std::string key;
  for (char ch : text) {
    if (ch == '-' || ch == '_') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (key == "ucl") return GraphMethod::UCl;
  if (key == "scl1") return GraphMethod::SCl1;
  if (key == "scl2") return GraphMethod::SCl2;
  throw Error(ErrorCode::ConfigError,
              "unknown method '" + std::string(text) + "' (expected u-cl, s-cl1 or s-cl2)");
}

bool uses_neighbors(GraphMethod method) { return method != GraphMethod::SCl1; }
bool needs_labels(GraphMethod method) { return method != GraphMethod::UCl; }

Matrix pairwise_squared_distances(const Matrix& X) {
  const Index n = X.cols();
  Matrix dist = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      double d = (X.col(i) - X.col(j)).squaredNorm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

NeighborIndex build_neighbor_index(const DataMatrix& X, Index k, const LabelVector* labels) {
  const Index n = X.sample_count();
  if (labels && labels->size() != n) {
    throw Error(ErrorCode::LengthMismatch, "labels do not match sample count");
  }
  if (k < 1) throw Error(ErrorCode::KTooLarge, "k must be at least 1");
  if (k > n - 1) {
    throw Error(ErrorCode::KTooLarge,
                "k=" + std::to_string(k) + " exceeds n-1=" + std::to_string(n - 1));
  }
  if (labels && k > labels->min_class_size() - 1) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds smallest class size - 1 (" +
                                          std::to_string(labels->min_class_size() - 1) + ")");
  }

  const Matrix dist = pairwise_squared_distances(X.values());
  NeighborIndex index;
  index.k = k;
  index.class_restricted = labels != nullptr;
  index.neighbors.resize(static_cast<std::size_t>(n));
  const bool thermal = n - 1 >= kThermalNeighbor;
  if (thermal) index.seventh_distance.resize(static_cast<std::size_t>(n));

  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    order.clear();
    for (Index i = 0; i < n; ++i) {
      if (i != j) order.push_back(i);
    }
    auto closer = [&](Index a, Index b) {
      if (dist(a, j) != dist(b, j)) return dist(a, j) < dist(b, j);
      return a < b;
    };
    std::sort(order.begin(), order.end(), closer);
    if (thermal) {
      index.seventh_distance[static_cast<std::size_t>(j)] =
          std::sqrt(dist(order[static_cast<std::size_t>(kThermalNeighbor - 1)], j));
    }
    auto& list = index.neighbors[static_cast<std::size_t>(j)];
    for (Index i : order) {
      if (static_cast<Index>(list.size()) == k) break;
      if (labels && (*labels)[i] != (*labels)[j]) continue;
      list.push_back(i);
    }
  }
  return index;
}

double thermal_weight(const DataMatrix& X, const NeighborIndex& index, Index i, Index j) {
  if (i == j) throw Error(ErrorCode::InvalidArgument, "thermal weight needs distinct samples");
  if (!index.has_thermal()) {
    throw Error(ErrorCode::TooFewSamplesForThermal,
                "thermal parameter needs more than 7 samples, have " + std::to_string(X.sample_count()));
  }
  const double t = index.seventh_distance[static_cast<std::size_t>(i)] *
                   index.seventh_distance[static_cast<std::size_t>(j)];
  if (t == 0.0) {
    throw Error(ErrorCode::ZeroThermal, "samples " + std::to_string(i) + " and " + std::to_string(j) +
                                            " coincide with their 7th nearest neighbour");
  }
  return std::exp(-(X.sample(i) - X.sample(j)).squaredNorm() / t);
}

namespace {

void require_thermal_size(const DataMatrix& X) {
  if (X.sample_count() <= kThermalNeighbor) {
    throw Error(ErrorCode::TooFewSamplesForThermal,
                "thermal parameter needs at least 8 samples, have " + std::to_string(X.sample_count()));
  }
}

ContrastiveGraphPair graph_from_neighbors(const DataMatrix& X, const NeighborIndex& index,
                                          GraphMethod method) {
  const Index n = X.sample_count();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> linked =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  for (Index j = 0; j < n; ++j) {
    for (Index i : index.neighbors[static_cast<std::size_t>(j)]) {
      linked(i, j) = true;
      linked(j, i) = true;
    }
  }
  ContrastiveGraphPair g{Matrix::Zero(n, n), Matrix::Zero(n, n), method};
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      if (linked(i, j)) {
        double w = thermal_weight(X, index, i, j);
        g.s_pos(i, j) = w;
        g.s_pos(j, i) = w;
      } else {
        g.s_neg(i, j) = 1.0;
        g.s_neg(j, i) = 1.0;
      }
    }
  }
  return g;
}

}  // namespace

ContrastiveGraphPair build_u_cl(const DataMatrix& X, Index k) {
  require_thermal_size(X);
  NeighborIndex index = build_neighbor_index(X, k);
  return graph_from_neighbors(X, index, GraphMethod::UCl);
}

ContrastiveGraphPair build_s_cl1(const LabelVector& labels) {
  const Index n = labels.size();
  ContrastiveGraphPair g{Matrix::Zero(n, n), Matrix::Zero(n, n), GraphMethod::SCl1};
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j) continue;
      if (labels[i] == labels[j]) {
        g.s_pos(i, j) = 1.0;
      } else {
        g.s_neg(i, j) = 1.0;
      }
    }
  }
  return g;
}

ContrastiveGraphPair build_s_cl2(const DataMatrix& X, const LabelVector& labels, Index k) {
  require_thermal_size(X);
  NeighborIndex index = build_neighbor_index(X, k, &labels);
  return graph_from_neighbors(X, index, GraphMethod::SCl2);
}

ContrastiveGraphPair build_graph(GraphMethod method, const DataMatrix& X, const LabelVector* labels,
                                 Index k) {
  if (needs_labels(method) && labels == nullptr) {
    throw Error(ErrorCode::MissingLabels, std::string(to_string(method)) + " requires class labels");
  }
  if (labels && labels->size() != X.sample_count()) {
    throw Error(ErrorCode::LengthMismatch, "labels do not match sample count");
  }
  switch (method) {
    case GraphMethod::UCl: return build_u_cl(X, k);
    case GraphMethod::SCl1: return build_s_cl1(*labels);
    case GraphMethod::SCl2: return build_s_cl2(X, *labels, k);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown graph method");
}

}  // namespace clufef
