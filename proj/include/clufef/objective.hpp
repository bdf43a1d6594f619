#pragma once

#include "clufef/core.hpp"
#include "clufef/graphs.hpp"

namespace clufef {

// Projected samples with norm at or below this floor make the cosine undefined.
inline constexpr double kEmbeddingNormFloor = 1e-12;

struct ObjectiveParams {
  double sigma = 1.0;

  void validate() const;
};

// D x d, same shape as the projection it differentiates.
using GradientMatrix = Matrix;

// Cosine similarity of P^T x_i and P^T x_j divided by sigma.
double sim(const ProjectionMatrix& P, const Eigen::Ref<const Vector>& xi,
           const Eigen::Ref<const Vector>& xj, double sigma);

// Gradient of sim with respect to P (quotient rule on the cosine).
GradientMatrix sim_gradient(const ProjectionMatrix& P, const Eigen::Ref<const Vector>& xi,
                            const Eigen::Ref<const Vector>& xj, double sigma);

struct LossAndGradient {
  double loss = 0.0;
  GradientMatrix gradient;
};

// Contrastive loss
//   L(P) = sum_i -log( sum_j Spos_ij e^{SIM_ij} / sum_j (Spos_ij + Sneg_ij) e^{SIM_ij} )
// and its gradient, evaluated in one pass over pairs. Numerator and denominator
// are each shifted by their own row maximum before exponentiation.
LossAndGradient loss_and_gradient(const ProjectionMatrix& P, const DataMatrix& X,
                                  const ContrastiveGraphPair& g, double sigma);

double loss(const ProjectionMatrix& P, const DataMatrix& X, const ContrastiveGraphPair& g,
            double sigma);

GradientMatrix gradient(const ProjectionMatrix& P, const DataMatrix& X,
                        const ContrastiveGraphPair& g, double sigma);

// Central differences of `loss` over every entry of P.
GradientMatrix finite_diff_gradient(const ProjectionMatrix& P, const DataMatrix& X,
                                    const ContrastiveGraphPair& g, double sigma, double h = 1e-5);

// max_ij |a_ij - f_ij| / max(|f_ij|, floor)
double max_relative_disagreement(const GradientMatrix& analytic, const GradientMatrix& reference,
                                 double floor = 1e-8);

}  // namespace clufef
