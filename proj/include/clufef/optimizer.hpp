#pragma once

#include <utility>
#include <vector>

#include "clufef/core.hpp"
#include "clufef/graphs.hpp"
#include "clufef/objective.hpp"

namespace clufef {

struct AdamHyperparams {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iter = 1000;
  // Stop once |L(P_t) - L(P_{t-1})| < tol.
  double tol = 0.001;

  void validate() const;
};

struct AdamState {
  Matrix m;
  Matrix v;
  long t = 0;

  static AdamState zeros(Index rows, Index cols);
};

// One Adam update. Pure: the inputs are not modified.
std::pair<AdamState, ProjectionMatrix> adam_step(const AdamState& state, const ProjectionMatrix& P,
                                                 const GradientMatrix& grad,
                                                 const AdamHyperparams& h);

struct FitResult {
  ProjectionMatrix projection;
  // L(P_0), L(P_1), ..., L(P_iterations).
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = false;
  double sigma = 1.0;
  AdamHyperparams hyperparams;

  double initial_loss() const { return loss_trace.front(); }
  double final_loss() const { return loss_trace.back(); }
};

FitResult fit(const DataMatrix& X, const ContrastiveGraphPair& g, double sigma,
              const AdamHyperparams& h, const ProjectionMatrix& P0);

}  // namespace clufef
