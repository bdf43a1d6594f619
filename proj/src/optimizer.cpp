#include "clufef/optimizer.hpp"

#include <cmath>
#include <string>

namespace clufef {

void AdamHyperparams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(alpha > 0.0)) fail("alpha must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) fail("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) fail("beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(tol > 0.0)) fail("tol must be positive");
  if (max_iter < 1) fail("max_iter must be at least 1");
}

AdamState AdamState::zeros(Index rows, Index cols) {
  return AdamState{Matrix::Zero(rows, cols), Matrix::Zero(rows, cols), 0};
}

std::pair<AdamState, ProjectionMatrix> adam_step(const AdamState& state, const ProjectionMatrix& P,
                                                 const GradientMatrix& grad,
                                                 const AdamHyperparams& h) {
  const Matrix& p = P.values();
  if (state.m.rows() != p.rows() || state.m.cols() != p.cols() || state.v.rows() != p.rows() ||
      state.v.cols() != p.cols() || grad.rows() != p.rows() || grad.cols() != p.cols()) {
    throw Error(ErrorCode::DimensionError, "Adam state, gradient and projection shapes differ");
  }
  if (!grad.allFinite()) throw Error(ErrorCode::NonFiniteGradient, "gradient has non-finite entries");

  AdamState next;
  next.t = state.t + 1;
  next.m = h.beta1 * state.m + (1.0 - h.beta1) * grad;
  next.v = h.beta2 * state.v + (1.0 - h.beta2) * grad.cwiseProduct(grad);

  Matrix m_hat;
  Matrix v_hat;
  if (next.t == 1 && state.m.isZero(0.0) && state.v.isZero(0.0)) {
    // From zero moments the bias-corrected estimates are exactly g and g^2;
    // dividing (1 - beta) * g by (1 - beta) does not round-trip in floating point.
    m_hat = grad;
    v_hat = grad.cwiseProduct(grad);
  } else {
    const double t = static_cast<double>(next.t);
    m_hat = next.m / (1.0 - std::pow(h.beta1, t));
    v_hat = next.v / (1.0 - std::pow(h.beta2, t));
  }
  Matrix updated = p.array() - h.alpha * m_hat.array() / (v_hat.array().sqrt() + h.epsilon);
  return {std::move(next), ProjectionMatrix(std::move(updated))};
}

FitResult fit(const DataMatrix& X, const ContrastiveGraphPair& g, double sigma,
              const AdamHyperparams& h, const ProjectionMatrix& P0) {
  h.validate();
  if (P0.input_dim() != X.feature_count()) {
    throw Error(ErrorCode::DimensionError, "initial projection has " + std::to_string(P0.input_dim()) +
                                               " rows, data has " +
                                               std::to_string(X.feature_count()) + " features");
  }

  // Each evaluation yields L(P_t) for the trace and g_{t+1} = grad L(P_t).
  LossAndGradient current = loss_and_gradient(P0, X, g, sigma);
  FitResult result{P0, {current.loss}, 0, false, sigma, h};
  AdamState state = AdamState::zeros(P0.input_dim(), P0.embed_dim());
  ProjectionMatrix P = P0;

  for (int iter = 1; iter <= h.max_iter; ++iter) {
    auto [next_state, next_P] = adam_step(state, P, current.gradient, h);
    state = std::move(next_state);
    P = std::move(next_P);
    current = loss_and_gradient(P, X, g, sigma);
    result.loss_trace.push_back(current.loss);
    result.iterations = iter;
    const double change = current.loss - result.loss_trace[result.loss_trace.size() - 2];
    if (std::abs(change) < h.tol) {
      result.converged = true;
      break;
    }
  }
  result.projection = std::move(P);
  return result;
}

}  // namespace clufef
