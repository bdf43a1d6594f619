#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clufef/error.hpp"

namespace clufef {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Training set stored column-per-sample: D rows (features) by n columns.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Index feature_count() const noexcept { return values_.rows(); }
  Index sample_count() const noexcept { return values_.cols(); }
  auto sample(Index j) const { return values_.col(j); }

  DataMatrix select(std::span<const Index> columns) const;

 private:
  Matrix values_;
};

// Class ids are contiguous in 1..C; `original(c)` recovers the label value
// found in the input file.
class LabelVector {
 public:
  LabelVector(std::vector<int> labels, int class_count);
  LabelVector(std::vector<int> labels, int class_count, std::vector<long long> original);

  // Remaps arbitrary integer labels onto 1..C in ascending order of value.
  static LabelVector from_raw(std::span<const long long> raw);

  Index size() const noexcept { return static_cast<Index>(labels_.size()); }
  int operator[](Index i) const { return labels_[static_cast<std::size_t>(i)]; }
  int class_count() const noexcept { return class_count_; }
  const std::vector<int>& values() const noexcept { return labels_; }
  long long original(int class_id) const { return original_.at(static_cast<std::size_t>(class_id - 1)); }
  const std::vector<long long>& original_values() const noexcept { return original_; }

  std::vector<Index> class_sizes() const;
  Index min_class_size() const;

  // Subset that keeps the class numbering; every class must still occur.
  LabelVector select(std::span<const Index> indices) const;

 private:
  std::vector<int> labels_;
  int class_count_;
  std::vector<long long> original_;
};

class ProjectionMatrix {
 public:
  explicit ProjectionMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Index input_dim() const noexcept { return values_.rows(); }
  Index embed_dim() const noexcept { return values_.cols(); }

 private:
  Matrix values_;
};

struct RandomSeed {
  std::uint64_t value = 0;
  friend bool operator==(RandomSeed, RandomSeed) = default;
};

// mt19937_64's output sequence is fixed by the standard; the distributions
// below are written out so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(RandomSeed seed) : engine_(seed.value) {}

  double uniform01();
  double normal();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

// Counter-based child seed: independent streams from one master seed.
RandomSeed derive_seed(RandomSeed master, std::uint64_t stream, std::uint64_t counter);

struct Dataset {
  DataMatrix X;
  std::optional<LabelVector> labels;
};

// Checks finiteness, shape and label consistency. `class_count` defaults to
// the largest label present.
Dataset validate_dataset(Matrix values, std::optional<std::vector<int>> labels = std::nullopt,
                         std::optional<int> class_count = std::nullopt);

// Seeded standard-normal draw, orthonormalized by Householder QR. Columns are
// sign-normalized so that R has a positive diagonal.
ProjectionMatrix init_projection(Index input_dim, Index embed_dim, RandomSeed seed);

// Y = P^T X.
Matrix project(const ProjectionMatrix& P, const Matrix& X);

bool all_finite(const Matrix& m);

}  // namespace clufef
