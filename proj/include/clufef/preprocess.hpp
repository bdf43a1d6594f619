#pragma once

#include <optional>

#include "clufef/core.hpp"

namespace clufef {

struct PcaModel {
  Vector mean;
  // D x d_pca, orthonormal columns in descending eigenvalue order. The entry
  // of largest magnitude in each column is positive (first such on ties).
  Matrix components;
  Vector eigenvalues;

  Index input_dim() const noexcept { return components.rows(); }
  Index output_dim() const noexcept { return components.cols(); }
};

// Eigendecomposition of the population covariance (divisor n). Uses the
// n x n Gram matrix instead when D > n.
PcaModel pca_fit(const DataMatrix& X, Index d_pca);
Matrix pca_transform(const PcaModel& model, const Matrix& X);

struct StandardizeModel {
  Vector mean;
  // Population standard deviation; 1 for constant features.
  Vector std;

  Index input_dim() const noexcept { return mean.size(); }
};

StandardizeModel standardize_fit(const DataMatrix& X);
Matrix standardize_apply(const StandardizeModel& model, const Matrix& X);
Matrix standardize_invert(const StandardizeModel& model, const Matrix& Z);

struct PreprocessConfig {
  std::optional<Index> pca_dim;
  bool standardize = true;
};

// PCA (optional) followed by standardization (optional), fitted on one set
// and replayed on others.
struct Preprocessor {
  std::optional<PcaModel> pca;
  std::optional<StandardizeModel> scaler;
  Index input_dim = 0;

  static Preprocessor fit(const DataMatrix& X, const PreprocessConfig& config);
  Matrix apply(const Matrix& X) const;
  Index output_dim() const;
};

}  // namespace clufef
