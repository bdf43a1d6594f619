#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "clufef/core.hpp"

namespace clufef {

enum class GraphMethod { UCl, SCl1, SCl2 };

std::string_view to_string(GraphMethod method);
// Accepts "u-cl", "s-cl1", "s-cl2" (case-insensitive, '_' or '-' optional).
GraphMethod parse_graph_method(std::string_view text);
bool uses_neighbors(GraphMethod method);
bool needs_labels(GraphMethod method);

// The contrastive learning graph: positive weights and negative indicators
// over ordered sample pairs. Both matrices are symmetric with zero diagonal
// and disjoint supports that cover every off-diagonal pair.
struct ContrastiveGraphPair {
  Matrix s_pos;
  Matrix s_neg;
  GraphMethod method;

  Index size() const noexcept { return s_pos.rows(); }
};

struct NeighborIndex {
  Index k = 0;
  bool class_restricted = false;
  // neighbors[j]: the k nearest samples to j, ascending distance, ties by index.
  std::vector<std::vector<Index>> neighbors;
  // Distance from each sample to its 7th nearest neighbour over all samples;
  // empty when n <= 7.
  std::vector<double> seventh_distance;

  bool has_thermal() const noexcept { return !seventh_distance.empty(); }
};

inline constexpr Index kThermalNeighbor = 7;

Matrix pairwise_squared_distances(const Matrix& X);

NeighborIndex build_neighbor_index(const DataMatrix& X, Index k,
                                   const LabelVector* labels = nullptr);

// exp(-|x_i - x_j|^2 / t) with t = r7(i) * r7(j).
double thermal_weight(const DataMatrix& X, const NeighborIndex& index, Index i, Index j);

ContrastiveGraphPair build_u_cl(const DataMatrix& X, Index k);
ContrastiveGraphPair build_s_cl1(const LabelVector& labels);
ContrastiveGraphPair build_s_cl2(const DataMatrix& X, const LabelVector& labels, Index k);

ContrastiveGraphPair build_graph(GraphMethod method, const DataMatrix& X,
                                 const LabelVector* labels, Index k);

}  // namespace clufef
