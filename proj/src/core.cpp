#include "clufef/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

namespace clufef {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::TooFewSamplesForThermal: return "TooFewSamplesForThermal";
    case ErrorCode::ZeroThermal: return "ZeroThermal";
    case ErrorCode::ZeroEmbeddingNorm: return "ZeroEmbeddingNorm";
    case ErrorCode::EmptyPositiveRow: return "EmptyPositiveRow";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1) {
    throw Error(ErrorCode::DimensionError, "data matrix needs at least one feature");
  }
  if (values_.cols() < 2) {
    throw Error(ErrorCode::DimensionError, "data matrix needs at least two samples");
  }
  if (!values_.allFinite()) {
    for (Index j = 0; j < values_.cols(); ++j) {
      for (Index i = 0; i < values_.rows(); ++i) {
        if (!std::isfinite(values_(i, j))) {
          throw Error(ErrorCode::NonFiniteEntry,
                      "feature " + std::to_string(i) + " of sample " + std::to_string(j));
        }
      }
    }
  }
}

DataMatrix DataMatrix::select(std::span<const Index> columns) const {
  Matrix out(values_.rows(), static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.col(static_cast<Index>(c)) = values_.col(columns[c]);
  }
  return DataMatrix(std::move(out));
}

LabelVector::LabelVector(std::vector<int> labels, int class_count)
    : LabelVector(std::move(labels), class_count, {}) {}

LabelVector::LabelVector(std::vector<int> labels, int class_count, std::vector<long long> original)
    : labels_(std::move(labels)), class_count_(class_count), original_(std::move(original)) {
  if (class_count_ < 1) {
    throw Error(ErrorCode::InvalidArgument, "class count must be positive");
  }
  if (original_.empty()) {
    for (int c = 1; c <= class_count_; ++c) original_.push_back(c);
  }
  if (static_cast<int>(original_.size()) != class_count_) {
    throw Error(ErrorCode::LengthMismatch, "label mapping does not cover every class");
  }
  std::vector<Index> counts(static_cast<std::size_t>(class_count_), 0);
  for (int c : labels_) {
    if (c < 1 || c > class_count_) {
      throw Error(ErrorCode::InvalidArgument,
                  "label " + std::to_string(c) + " outside 1.." + std::to_string(class_count_));
    }
    ++counts[static_cast<std::size_t>(c - 1)];
  }
  for (int c = 1; c <= class_count_; ++c) {
    if (counts[static_cast<std::size_t>(c - 1)] == 0) {
      throw Error(ErrorCode::EmptyClass, "class " + std::to_string(c) + " has no samples");
    }
  }
}

LabelVector LabelVector::from_raw(std::span<const long long> raw) {
  std::set<long long> distinct(raw.begin(), raw.end());
  std::vector<long long> original(distinct.begin(), distinct.end());
  std::vector<int> labels;
  labels.reserve(raw.size());
  for (long long value : raw) {
    auto it = std::lower_bound(original.begin(), original.end(), value);
    labels.push_back(static_cast<int>(it - original.begin()) + 1);
  }
  int count = static_cast<int>(original.size());
  return LabelVector(std::move(labels), count, std::move(original));
}

std::vector<Index> LabelVector::class_sizes() const {
  std::vector<Index> counts(static_cast<std::size_t>(class_count_), 0);
  for (int c : labels_) ++counts[static_cast<std::size_t>(c - 1)];
  return counts;
}

Index LabelVector::min_class_size() const {
  auto sizes = class_sizes();
  return *std::min_element(sizes.begin(), sizes.end());
}

LabelVector LabelVector::select(std::span<const Index> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (Index i : indices) out.push_back(labels_.at(static_cast<std::size_t>(i)));
  return LabelVector(std::move(out), class_count_, original_);
}

ProjectionMatrix::ProjectionMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.cols() < 1 || values_.cols() > values_.rows()) {
    throw Error(ErrorCode::DimensionError,
                "projection must be D x d with 1 <= d <= D, got " + std::to_string(values_.rows()) +
                    " x " + std::to_string(values_.cols()));
  }
  if (!values_.allFinite()) {
    throw Error(ErrorCode::NonFiniteEntry, "projection matrix has non-finite entries");
  }
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_normal_) {
    double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  double u1 = 0.0;
  while (u1 == 0.0) u1 = uniform01();
  double u2 = uniform01();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::InvalidArgument, "empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RandomSeed derive_seed(RandomSeed master, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t h = splitmix64(master.value);
  h = splitmix64(h ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(counter + 0x85157af5ULL));
  return RandomSeed{h};
}

Dataset validate_dataset(Matrix values, std::optional<std::vector<int>> labels,
                         std::optional<int> class_count) {
  DataMatrix X(std::move(values));
  if (!labels) return Dataset{std::move(X), std::nullopt};
  if (static_cast<Index>(labels->size()) != X.sample_count()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(labels->size()) + " labels for " +
                                               std::to_string(X.sample_count()) + " samples");
  }
  int count = class_count.value_or(labels->empty() ? 0 : *std::max_element(labels->begin(), labels->end()));
  LabelVector lv(std::move(*labels), count);
  return Dataset{std::move(X), std::move(lv)};
}

ProjectionMatrix init_projection(Index input_dim, Index embed_dim, RandomSeed seed) {
  if (embed_dim < 1 || embed_dim > input_dim) {
    throw Error(ErrorCode::DimensionError, "need 1 <= d <= D, got d=" + std::to_string(embed_dim) +
                                               " D=" + std::to_string(input_dim));
  }
  Rng rng(seed);
  Matrix draw(input_dim, embed_dim);
  for (Index j = 0; j < embed_dim; ++j) {
    for (Index i = 0; i < input_dim; ++i) draw(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(draw);
  Matrix q = qr.householderQ() * Matrix::Identity(input_dim, embed_dim);
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < embed_dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return ProjectionMatrix(std::move(q));
}

Matrix project(const ProjectionMatrix& P, const Matrix& X) {
  if (P.input_dim() != X.rows()) {
    throw Error(ErrorCode::DimensionError, "projection expects " + std::to_string(P.input_dim()) +
                                               " features, data has " + std::to_string(X.rows()));
  }
  return P.values().transpose() * X;
}

}  // namespace clufef
