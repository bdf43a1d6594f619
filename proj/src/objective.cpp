#include "clufef/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace clufef {

void ObjectiveParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be a positive finite number");
  }
}

namespace {

void check_sigma(double sigma) { ObjectiveParams{sigma}.validate(); }

double checked_norm(const Vector& y, const char* which) {
  double norm = y.norm();
  if (!(norm > kEmbeddingNormFloor)) {
    throw Error(ErrorCode::ZeroEmbeddingNorm, std::string("projected ") + which + " has norm " +
                                                  std::to_string(norm));
  }
  return norm;
}

}  // namespace

double sim(const ProjectionMatrix& P, const Eigen::Ref<const Vector>& xi,
           const Eigen::Ref<const Vector>& xj, double sigma) {
  check_sigma(sigma);
  if (xi.size() != P.input_dim() || xj.size() != P.input_dim()) {
    throw Error(ErrorCode::DimensionError, "sample length does not match projection rows");
  }
  Vector yi = P.values().transpose() * xi;
  Vector yj = P.values().transpose() * xj;
  double ni = checked_norm(yi, "x_i");
  double nj = checked_norm(yj, "x_j");
  return yi.dot(yj) / (ni * nj * sigma);
}

GradientMatrix sim_gradient(const ProjectionMatrix& P, const Eigen::Ref<const Vector>& xi,
                            const Eigen::Ref<const Vector>& xj, double sigma) {
  check_sigma(sigma);
  if (xi.size() != P.input_dim() || xj.size() != P.input_dim()) {
    throw Error(ErrorCode::DimensionError, "sample length does not match projection rows");
  }
  const Vector yi = P.values().transpose() * xi;
  const Vector yj = P.values().transpose() * xj;
  const double ni = checked_norm(yi, "x_i");
  const double nj = checked_norm(yj, "x_j");
  const double inner = yi.dot(yj);
  const double denom = ni * nj * sigma;
  Matrix cross = xi * yj.transpose() + xj * yi.transpose();
  Matrix self = xi * yi.transpose() * (nj * sigma / ni) + xj * yj.transpose() * (ni * sigma / nj);
  return (cross * denom - self * inner) / (denom * denom);
}

namespace {

LossAndGradient evaluate(const ProjectionMatrix& P, const DataMatrix& X,
                         const ContrastiveGraphPair& g, double sigma, bool want_gradient) {
  check_sigma(sigma);
  const Index n = X.sample_count();
  if (P.input_dim() != X.feature_count()) {
    throw Error(ErrorCode::DimensionError, "projection rows do not match feature count");
  }
  if (g.s_pos.rows() != n || g.s_pos.cols() != n || g.s_neg.rows() != n || g.s_neg.cols() != n) {
    throw Error(ErrorCode::DimensionError, "graph size does not match sample count");
  }

  const Matrix Y = P.values().transpose() * X.values();
  Vector inv_norm(n);
  for (Index i = 0; i < n; ++i) {
    double norm = Y.col(i).norm();
    if (!(norm > kEmbeddingNormFloor)) {
      throw Error(ErrorCode::ZeroEmbeddingNorm,
                  "sample " + std::to_string(i) + " projects to norm " + std::to_string(norm));
    }
    inv_norm(i) = 1.0 / norm;
  }
  const Matrix U = Y * inv_norm.asDiagonal();

  // Exactly symmetric similarity matrix.
  Matrix lower = Matrix::Zero(n, n);
  lower.selfadjointView<Eigen::Lower>().rankUpdate(U.transpose(), 1.0 / sigma);
  const Matrix sims = lower.selfadjointView<Eigen::Lower>();

  const Matrix& pos = g.s_pos;
  const Matrix who = g.s_pos + g.s_neg;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // Pass 1: row maxima over the numerator and denominator supports.
  Vector max_num = Vector::Constant(n, kNegInf);
  Vector max_den = Vector::Constant(n, kNegInf);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double s = sims(i, j);
      if (pos(i, j) > 0.0 && s > max_num(i)) max_num(i) = s;
      if (who(i, j) > 0.0 && s > max_den(i)) max_den(i) = s;
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (max_num(i) == kNegInf) {
      throw Error(ErrorCode::EmptyPositiveRow, "row " + std::to_string(i) + " has no positive pair");
    }
  }

  // Pass 2: shifted exponentials and row sums.
  Matrix e_num = Matrix::Zero(n, n);
  Matrix e_den = Matrix::Zero(n, n);
  Vector num = Vector::Zero(n);
  Vector den = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double w = who(i, j);
      if (w == 0.0) continue;
      const double ed = std::exp(sims(i, j) - max_den(i));
      e_den(i, j) = ed;
      den(i) += w * ed;
      const double p = pos(i, j);
      if (p != 0.0) {
        const double en = std::exp(sims(i, j) - max_num(i));
        e_num(i, j) = en;
        num(i) += p * en;
      }
    }
  }

  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double row = (max_den(i) + std::log(den(i))) - (max_num(i) + std::log(num(i)));
    total += std::max(row, 0.0);
  }
  if (!std::isfinite(total)) {
    throw Error(ErrorCode::NonFiniteEntry, "loss evaluated to a non-finite value");
  }
  LossAndGradient out;
  out.loss = total;
  if (!want_gradient) return out;

  // dL/dSIM_ij for the row-i term.
  Matrix coeff(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      coeff(i, j) = who(i, j) * e_den(i, j) / den(i) - pos(i, j) * e_num(i, j) / num(i);
    }
  }
  // SIM_ij = SIM_ji, so each pair receives both row contributions.
  const Matrix pair_coeff = coeff + coeff.transpose();
  const Matrix grad_unit = (U * pair_coeff) / sigma;

  Matrix grad_embed(Y.rows(), n);
  for (Index i = 0; i < n; ++i) {
    const auto u = U.col(i);
    const auto gu = grad_unit.col(i);
    grad_embed.col(i) = (gu - u * u.dot(gu)) * inv_norm(i);
  }

  out.gradient = X.values() * grad_embed.transpose();
  if (!out.gradient.allFinite()) {
    throw Error(ErrorCode::NonFiniteGradient, "gradient has non-finite entries");
  }
  return out;
}

}  // namespace

LossAndGradient loss_and_gradient(const ProjectionMatrix& P, const DataMatrix& X,
                                  const ContrastiveGraphPair& g, double sigma) {
  return evaluate(P, X, g, sigma, true);
}

double loss(const ProjectionMatrix& P, const DataMatrix& X, const ContrastiveGraphPair& g,
            double sigma) {
  return evaluate(P, X, g, sigma, false).loss;
}

GradientMatrix gradient(const ProjectionMatrix& P, const DataMatrix& X,
                        const ContrastiveGraphPair& g, double sigma) {
  return loss_and_gradient(P, X, g, sigma).gradient;
}

GradientMatrix finite_diff_gradient(const ProjectionMatrix& P, const DataMatrix& X,
                                    const ContrastiveGraphPair& g, double sigma, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  GradientMatrix out(P.input_dim(), P.embed_dim());
  Matrix probe = P.values();
  for (Index c = 0; c < probe.cols(); ++c) {
    for (Index r = 0; r < probe.rows(); ++r) {
      const double saved = probe(r, c);
      probe(r, c) = saved + h;
      const double up = loss(ProjectionMatrix(probe), X, g, sigma);
      probe(r, c) = saved - h;
      const double down = loss(ProjectionMatrix(probe), X, g, sigma);
      probe(r, c) = saved;
      out(r, c) = (up - down) / (2.0 * h);
    }
  }
  return out;
}

double max_relative_disagreement(const GradientMatrix& analytic, const GradientMatrix& reference,
                                 double floor) {
  if (analytic.rows() != reference.rows() || analytic.cols() != reference.cols()) {
    throw Error(ErrorCode::DimensionError, "gradient shapes differ");
  }
  double worst = 0.0;
  for (Index c = 0; c < analytic.cols(); ++c) {
    for (Index r = 0; r < analytic.rows(); ++r) {
      const double f = reference(r, c);
      worst = std::max(worst, std::abs(analytic(r, c) - f) / std::max(std::abs(f), floor));
    }
  }
  return worst;
}

}  // namespace clufef
