#include "clufef/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace clufef {

namespace {

void fix_signs(Matrix& components) {
  for (Index c = 0; c < components.cols(); ++c) {
    Index best = 0;
    for (Index r = 1; r < components.rows(); ++r) {
      if (std::abs(components(r, c)) > std::abs(components(best, c))) best = r;
    }
    if (components(best, c) < 0.0) components.col(c) *= -1.0;
  }
}

// Modified Gram-Schmidt that replaces (near-)dependent columns with the first
// unused standard basis direction.
void orthonormalize(Matrix& basis) {
  const Index rows = basis.rows();
  Index next_unit = 0;
  for (Index c = 0; c < basis.cols(); ++c) {
    for (int attempt = 0;; ++attempt) {
      const double before = basis.col(c).norm();
      for (int pass = 0; pass < 2; ++pass) {
        for (Index p = 0; p < c; ++p) basis.col(c) -= basis.col(p).dot(basis.col(c)) * basis.col(p);
      }
      const double after = basis.col(c).norm();
      if (after > 1e-10 * std::max(before, 1.0)) {
        basis.col(c) /= after;
        break;
      }
      if (next_unit >= rows) throw Error(ErrorCode::DimensionError, "cannot complete orthonormal basis");
      basis.col(c) = Vector::Unit(rows, next_unit++);
    }
  }
}

}  // namespace

PcaModel pca_fit(const DataMatrix& X, Index d_pca) {
  const Index D = X.feature_count();
  const Index n = X.sample_count();
  if (d_pca < 1 || d_pca > std::min(D, n - 1)) {
    throw Error(ErrorCode::DimensionError, "PCA dimension " + std::to_string(d_pca) +
                                               " outside 1..min(D, n-1)=" +
                                               std::to_string(std::min(D, n - 1)));
  }
  PcaModel model;
  model.mean = X.values().rowwise().mean();
  const Matrix centered = X.values().colwise() - model.mean;
  const double inv_n = 1.0 / static_cast<double>(n);

  model.eigenvalues.resize(d_pca);
  model.components.resize(D, d_pca);
  if (D <= n) {
    const Matrix cov = (centered * centered.transpose()) * inv_n;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "eigensolver failed");
    for (Index c = 0; c < d_pca; ++c) {
      model.eigenvalues(c) = solver.eigenvalues()(D - 1 - c);
      model.components.col(c) = solver.eigenvectors().col(D - 1 - c);
    }
  } else {
    const Matrix gram = (centered.transpose() * centered) * inv_n;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "eigensolver failed");
    const double top = std::max(solver.eigenvalues()(n - 1), 0.0);
    for (Index c = 0; c < d_pca; ++c) {
      const double lambda = solver.eigenvalues()(n - 1 - c);
      model.eigenvalues(c) = lambda;
      if (lambda > 1e-12 * std::max(top, 1.0)) {
        model.components.col(c) =
            centered * solver.eigenvectors().col(n - 1 - c) / std::sqrt(static_cast<double>(n) * lambda);
      } else {
        model.components.col(c).setZero();
      }
    }
    orthonormalize(model.components);
  }
  fix_signs(model.components);
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& X) {
  if (X.rows() != model.input_dim()) {
    throw Error(ErrorCode::DimensionError, "PCA model expects " + std::to_string(model.input_dim()) +
                                               " features, data has " + std::to_string(X.rows()));
  }
  return model.components.transpose() * (X.colwise() - model.mean);
}

StandardizeModel standardize_fit(const DataMatrix& X) {
  const Matrix& values = X.values();
  const Index D = values.rows();
  const double n = static_cast<double>(values.cols());
  StandardizeModel model{Vector(D), Vector(D)};
  for (Index f = 0; f < D; ++f) {
    const auto row = values.row(f);
    if (row.maxCoeff() == row.minCoeff()) {
      // Constant feature: maps to exactly zero.
      model.mean(f) = row(0);
      model.std(f) = 1.0;
      continue;
    }
    const double mean = row.mean();
    const double var = (row.array() - mean).square().sum() / n;
    model.mean(f) = mean;
    model.std(f) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return model;
}

Matrix standardize_apply(const StandardizeModel& model, const Matrix& X) {
  if (X.rows() != model.input_dim()) {
    throw Error(ErrorCode::DimensionError, "standardizer expects " + std::to_string(model.input_dim()) +
                                               " features, data has " + std::to_string(X.rows()));
  }
  return (X.colwise() - model.mean).array().colwise() / model.std.array();
}

Matrix standardize_invert(const StandardizeModel& model, const Matrix& Z) {
  if (Z.rows() != model.input_dim()) {
    throw Error(ErrorCode::DimensionError, "standardizer dimension mismatch");
  }
  Matrix out = Z.array().colwise() * model.std.array();
  return out.colwise() + model.mean;
}

Preprocessor Preprocessor::fit(const DataMatrix& X, const PreprocessConfig& config) {
  Preprocessor pre;
  pre.input_dim = X.feature_count();
  Matrix current = X.values();
  if (config.pca_dim) {
    pre.pca = pca_fit(X, *config.pca_dim);
    current = pca_transform(*pre.pca, current);
  }
  if (config.standardize) {
    pre.scaler = standardize_fit(DataMatrix(current));
  }
  return pre;
}

Matrix Preprocessor::apply(const Matrix& X) const {
  if (X.rows() != input_dim) {
    throw Error(ErrorCode::DimensionError, "expected " + std::to_string(input_dim) +
                                               " features, data has " + std::to_string(X.rows()));
  }
  Matrix current = X;
  if (pca) current = pca_transform(*pca, current);
  if (scaler) current = standardize_apply(*scaler, current);
  return current;
}

Index Preprocessor::output_dim() const {
  if (scaler) return scaler->input_dim();
  if (pca) return pca->output_dim();
  return input_dim;
}

}  // namespace clufef
