#include "clufef/eval.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <numeric>
#include <thread>

namespace clufef {

std::vector<int> knn_classify(const Matrix& train_embed, std::span<const int> train_labels,
                              const Matrix& test_embed, Index k_nn) {
  const Index m = train_embed.cols();
  if (static_cast<Index>(train_labels.size()) != m) {
    throw Error(ErrorCode::LengthMismatch, "training labels do not match training samples");
  }
  if (train_embed.rows() != test_embed.rows()) {
    throw Error(ErrorCode::DimensionError, "training and test embeddings differ in dimension");
  }
  if (k_nn < 1 || k_nn > m) {
    throw Error(ErrorCode::InvalidArgument, "k_nn must lie in 1..number of training samples");
  }
  std::vector<int> predicted;
  predicted.reserve(static_cast<std::size_t>(test_embed.cols()));
  std::vector<std::pair<double, Index>> order(static_cast<std::size_t>(m));
  for (Index q = 0; q < test_embed.cols(); ++q) {
    const auto point = test_embed.col(q);
    if (k_nn == 1) {
      Index best = 0;
      double best_dist = (train_embed.col(0) - point).squaredNorm();
      for (Index i = 1; i < m; ++i) {
        const double dist = (train_embed.col(i) - point).squaredNorm();
        if (dist < best_dist) {
          best_dist = dist;
          best = i;
        }
      }
      predicted.push_back(train_labels[static_cast<std::size_t>(best)]);
      continue;
    }
    for (Index i = 0; i < m; ++i) {
      order[static_cast<std::size_t>(i)] = {(train_embed.col(i) - point).squaredNorm(), i};
    }
    std::partial_sort(order.begin(), order.begin() + k_nn, order.end());
    std::map<int, int> votes;
    int top = 0;
    for (Index r = 0; r < k_nn; ++r) {
      top = std::max(top, ++votes[train_labels[static_cast<std::size_t>(order[r].second)]]);
    }
    for (Index r = 0; r < k_nn; ++r) {
      const int label = train_labels[static_cast<std::size_t>(order[r].second)];
      if (votes[label] == top) {
        predicted.push_back(label);
        break;
      }
    }
  }
  return predicted;
}

double recognition_accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, "true and predicted label counts differ");
  }
  if (truth.empty()) throw Error(ErrorCode::InvalidArgument, "no predictions to score");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

std::string_view to_string(RecallMode mode) {
  return mode == RecallMode::Standard ? "standard" : "predicted-count";
}

RecallMode parse_recall_mode(std::string_view text) {
  if (text == "standard") return RecallMode::Standard;
  if (text == "predicted-count" || text == "predicted") return RecallMode::PredictedCount;
  throw Error(ErrorCode::ConfigError,
              "unknown recall mode '" + std::string(text) + "' (expected standard or predicted-count)");
}

double recall_rate(std::span<const int> truth, std::span<const int> predicted, RecallMode mode) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, "true and predicted label counts differ");
  }
  if (truth.empty()) throw Error(ErrorCode::InvalidArgument, "no predictions to score");
  std::map<int, long> hits, true_count, predicted_count;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++true_count[truth[i]];
    ++predicted_count[predicted[i]];
    if (truth[i] == predicted[i]) ++hits[truth[i]];
  }
  // Summed as a reduced fraction so the result is the correctly rounded rate;
  // falls back to floating point if the common denominator overflows.
  long long num = 0, den = 1;
  bool exact = true;
  double sum = 0.0;
  for (const auto& [label, count] : true_count) {
    const long denom = mode == RecallMode::Standard ? count : predicted_count[label];
    if (denom == 0) continue;
    sum += static_cast<double>(hits[label]) / static_cast<double>(denom);
    if (!exact) continue;
    long long a = 0, b = 0, d = 0;
    exact = !__builtin_mul_overflow(num, static_cast<long long>(denom), &a) &&
            !__builtin_mul_overflow(static_cast<long long>(hits[label]), den, &b) &&
            !__builtin_add_overflow(a, b, &num) &&
            !__builtin_mul_overflow(den, static_cast<long long>(denom), &d);
    if (!exact) continue;
    den = d;
    const long long g = std::gcd(num, den);
    num /= g;
    den /= g;
  }
  const auto classes = static_cast<long long>(true_count.size());
  long long total = 0;
  if (exact && !__builtin_mul_overflow(den, classes, &total) && num < (1LL << 53) && total < (1LL << 53)) {
    return static_cast<double>(num) / static_cast<double>(total);
  }
  return sum / static_cast<double>(classes);
}

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted,
                                 int class_count) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, "true and predicted label counts differ");
  }
  ConfusionMatrix cm = ConfusionMatrix::Zero(class_count, class_count);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 1 || truth[i] > class_count || predicted[i] < 1 || predicted[i] > class_count) {
      throw Error(ErrorCode::InvalidArgument, "label outside 1..class_count");
    }
    ++cm(truth[i] - 1, predicted[i] - 1);
  }
  return cm;
}

void SplitSpec::validate(const LabelVector& labels) const {
  if (repeats < 1) throw Error(ErrorCode::ConfigError, "repeats must be at least 1");
  if (train_per_class < 1) throw Error(ErrorCode::ConfigError, "train_per_class must be at least 1");
  if (train_per_class >= labels.min_class_size()) {
    throw Error(ErrorCode::ConfigError,
                "train_per_class=" + std::to_string(train_per_class) +
                    " leaves no test sample in the smallest class (size " +
                    std::to_string(labels.min_class_size()) + ")");
  }
}

Split make_split(const LabelVector& labels, Index train_per_class, RandomSeed seed) {
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(labels.class_count()));
  for (Index i = 0; i < labels.size(); ++i) {
    members[static_cast<std::size_t>(labels[i] - 1)].push_back(i);
  }
  Rng rng(seed);
  Split split;
  for (auto& group : members) {
    if (static_cast<Index>(group.size()) < train_per_class) {
      throw Error(ErrorCode::ConfigError, "class smaller than train_per_class");
    }
    rng.shuffle(group);
    for (std::size_t r = 0; r < group.size(); ++r) {
      (static_cast<Index>(r) < train_per_class ? split.train : split.test).push_back(group[r]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

RandomSeed split_seed(RandomSeed master, int repeat) {
  return derive_seed(master, static_cast<std::uint64_t>(repeat), 0);
}

RandomSeed init_seed(RandomSeed master, int repeat) {
  return derive_seed(master, static_cast<std::uint64_t>(repeat), 1);
}

namespace {

RepeatResult run_repeat(const DataMatrix& X, const LabelVector& labels, const ExperimentConfig& config,
                        int repeat) {
  RepeatResult out;
  out.split_seed = split_seed(config.split.seed, repeat);
  out.init_seed = init_seed(config.split.seed, repeat);
  const Split split = make_split(labels, config.split.train_per_class, out.split_seed);
  out.train_size = static_cast<Index>(split.train.size());
  out.test_size = static_cast<Index>(split.test.size());

  const DataMatrix train_raw = X.select(split.train);
  const LabelVector train_labels = labels.select(split.train);
  const Preprocessor pre = Preprocessor::fit(train_raw, config.preprocess);
  const DataMatrix train(pre.apply(train_raw.values()));
  Matrix test_raw(X.feature_count(), out.test_size);
  std::vector<int> test_labels;
  for (std::size_t c = 0; c < split.test.size(); ++c) {
    test_raw.col(static_cast<Index>(c)) = X.sample(split.test[c]);
    test_labels.push_back(labels[split.test[c]]);
  }
  const Matrix test = pre.apply(test_raw);

  if (config.embed_dim > train.feature_count()) {
    throw Error(ErrorCode::DimensionError, "embedding dimension " + std::to_string(config.embed_dim) +
                                               " exceeds preprocessed feature count " +
                                               std::to_string(train.feature_count()));
  }
  const ContrastiveGraphPair graph = build_graph(config.method, train, &train_labels, config.k);
  const ProjectionMatrix P0 = init_projection(train.feature_count(), config.embed_dim, out.init_seed);
  const FitResult fitted = fit(train, graph, config.sigma, config.adam, P0);
  out.iterations = fitted.iterations;
  out.converged = fitted.converged;
  out.initial_loss = fitted.initial_loss();
  out.final_loss = fitted.final_loss();

  const Matrix train_embed = project(fitted.projection, train.values());
  const Matrix test_embed = project(fitted.projection, test);
  const std::vector<int> predicted = knn_classify(train_embed, train_labels.values(), test_embed, 1);
  out.accuracy = recognition_accuracy(test_labels, predicted);
  out.recall = recall_rate(test_labels, predicted, config.recall_mode);
  out.confusion = confusion_matrix(test_labels, predicted, labels.class_count());
  return out;
}

}  // namespace

EvaluationReport run_experiment(const DataMatrix& X, const LabelVector& labels,
                                const ExperimentConfig& config) {
  if (labels.size() != X.sample_count()) {
    throw Error(ErrorCode::LengthMismatch, "labels do not match sample count");
  }
  ObjectiveParams{config.sigma}.validate();
  config.adam.validate();
  config.split.validate(labels);
  if (config.embed_dim < 1) throw Error(ErrorCode::ConfigError, "embedding dimension must be positive");

  EvaluationReport report;
  report.config = config;
  for (int r = 0; r < config.split.repeats; ++r) {
    try {
      report.repeats.push_back(run_repeat(X, labels, config, r));
    } catch (const Error& e) {
      throw Error(e.code(), "repeat " + std::to_string(r) + ": " + e.detail());
    }
  }
  double acc = 0.0, rec = 0.0;
  for (const auto& r : report.repeats) {
    acc += r.accuracy;
    rec += r.recall;
  }
  report.mean_accuracy = acc / static_cast<double>(report.repeats.size());
  report.mean_recall = rec / static_cast<double>(report.repeats.size());
  return report;
}

void GridSpec::validate() const {
  if (k_values.empty() || sigma_values.empty()) throw Error(ErrorCode::ConfigError, "empty grid");
  for (Index k : k_values) {
    if (k < 1) throw Error(ErrorCode::ConfigError, "grid k values must be at least 1");
  }
  for (double s : sigma_values) {
    if (!(s > 0.0)) throw Error(ErrorCode::ConfigError, "grid sigma values must be positive");
  }
}

GridResult grid_search(const DataMatrix& X, const LabelVector& labels, const ExperimentConfig& base,
                       const GridSpec& grid, int jobs) {
  grid.validate();
  GridResult result;
  for (Index k : grid.k_values) {
    for (double sigma : grid.sigma_values) result.cells.push_back(GridCell{k, sigma, std::nullopt, {}});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < result.cells.size(); c = next++) {
      GridCell& cell = result.cells[c];
      ExperimentConfig config = base;
      config.k = cell.k;
      config.sigma = cell.sigma;
      try {
        cell.report = run_experiment(X, labels, config);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(result.cells.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const GridCell& cell = result.cells[c];
    if (!cell.report) continue;
    if (!best) {
      best = c;
      continue;
    }
    const GridCell& champion = result.cells[*best];
    const double a = cell.report->mean_accuracy;
    const double b = champion.report->mean_accuracy;
    if (a > b || (a == b && (cell.k < champion.k || (cell.k == champion.k && cell.sigma < champion.sigma)))) {
      best = c;
    }
  }
  if (!best) {
    throw Error(ErrorCode::ConfigError, "every grid cell failed; first error: " + result.cells.front().error);
  }
  result.best = *best;
  return result;
}

}  // namespace clufef
