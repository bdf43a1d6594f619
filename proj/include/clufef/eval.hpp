#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clufef/core.hpp"
#include "clufef/graphs.hpp"
#include "clufef/optimizer.hpp"
#include "clufef/preprocess.hpp"

namespace clufef {

using ConfusionMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

// Nearest-neighbour vote in embedding space. Equidistant training points are
// ordered by index; a tied vote goes to the class met first in that order.
std::vector<int> knn_classify(const Matrix& train_embed, std::span<const int> train_labels,
                              const Matrix& test_embed, Index k_nn = 1);

double recognition_accuracy(std::span<const int> truth, std::span<const int> predicted);

enum class RecallMode {
  // T_c / (samples truly in class c), averaged over classes.
  Standard,
  // T_c / (samples predicted as class c); an empty class contributes 0.
  PredictedCount,
};

std::string_view to_string(RecallMode mode);
RecallMode parse_recall_mode(std::string_view text);

// Averaged over the classes present in `truth`.
double recall_rate(std::span<const int> truth, std::span<const int> predicted,
                   RecallMode mode = RecallMode::Standard);

// rows: true class, columns: predicted class, both 1..class_count.
ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted,
                                 int class_count);

struct SplitSpec {
  Index train_per_class = 6;
  int repeats = 5;
  RandomSeed seed{0};

  void validate(const LabelVector& labels) const;
};

struct Split {
  std::vector<Index> train;
  std::vector<Index> test;
};

// Per class: seeded permutation of its members, the first train_per_class go
// to training. Both index lists are returned in ascending order.
Split make_split(const LabelVector& labels, Index train_per_class, RandomSeed seed);

// Seeds for repeat r: stream r, counter 0 for the split, 1 for P_0.
RandomSeed split_seed(RandomSeed master, int repeat);
RandomSeed init_seed(RandomSeed master, int repeat);

struct ExperimentConfig {
  GraphMethod method = GraphMethod::SCl2;
  Index embed_dim = 2;
  Index k = 6;
  double sigma = 1.0;
  SplitSpec split;
  PreprocessConfig preprocess;
  AdamHyperparams adam;
  RecallMode recall_mode = RecallMode::Standard;
};

struct RepeatResult {
  double accuracy = 0.0;
  double recall = 0.0;
  ConfusionMatrix confusion;
  int iterations = 0;
  bool converged = false;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  RandomSeed split_seed;
  RandomSeed init_seed;
  Index train_size = 0;
  Index test_size = 0;
};

struct EvaluationReport {
  ExperimentConfig config;
  std::vector<RepeatResult> repeats;
  double mean_accuracy = 0.0;
  double mean_recall = 0.0;
};

EvaluationReport run_experiment(const DataMatrix& X, const LabelVector& labels,
                                const ExperimentConfig& config);

struct GridSpec {
  std::vector<Index> k_values{2, 4, 6, 8, 10};
  std::vector<double> sigma_values{0.01, 0.1, 1, 10, 100, 1000};

  void validate() const;
};

struct GridCell {
  Index k = 0;
  double sigma = 0.0;
  std::optional<EvaluationReport> report;
  std::string error;
};

struct GridResult {
  // k-major order, sigma varying fastest.
  std::vector<GridCell> cells;
  std::size_t best = 0;

  const GridCell& best_cell() const { return cells.at(best); }
};

// Evaluates every (k, sigma) cell of `grid` with the remaining settings from
// `base`. Cells that fail are kept with their error message; the call only
// throws when every cell fails. `jobs` bounds the worker threads.
GridResult grid_search(const DataMatrix& X, const LabelVector& labels, const ExperimentConfig& base,
                       const GridSpec& grid, int jobs = 1);

}  // namespace clufef
