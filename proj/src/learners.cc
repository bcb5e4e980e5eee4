#include "odsim/learners.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "odsim/errors.h"

namespace odsim {

namespace {

void require_shape(const Matrix& grad, const DraftParams& params,
                   const char* op) {
  if (grad.rows() != params.vocab_size() || grad.cols() != params.dim()) {
    throw DimensionMismatch(std::string(op) + ": gradient is " +
                            std::to_string(grad.rows()) + "x" +
                            std::to_string(grad.cols()) + ", params are " +
                            std::to_string(params.vocab_size()) + "x" +
                            std::to_string(params.dim()));
  }
}

void require_eta(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("step size must be positive and finite");
  }
}

nlohmann::json matrix_to_json(const Matrix& m) {
  std::vector<double> flat;
  flat.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(flat.size()) != rows * cols) {
    throw DimensionMismatch("matrix_from_json: size mismatch");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[r * cols + c];
  }
  return m;
}

}  // namespace

nlohmann::json OgdState::to_json() const {
  return {{"params", params.to_json()}, {"eta", eta}};
}

OgdState OgdState::from_json(const nlohmann::json& j) {
  OgdState s{DraftParams::from_json(j.at("params")), j.at("eta").get<double>()};
  require_eta(s.eta);
  return s;
}

OgdState ogd_update(const OgdState& state, const Matrix& grad) {
  require_shape(grad, state.params, "ogd_update");
  return {project(state.params.matrix() - state.eta * grad, state.params.radius()),
          state.eta};
}

OptimisticState OptimisticState::start(const DraftParams& init, double eta) {
  require_eta(eta);
  return {init, init, eta, Matrix::Zero(init.vocab_size(), init.dim())};
}

nlohmann::json OptimisticState::to_json() const {
  return {{"committed", committed.to_json()},
          {"played", played.to_json()},
          {"eta", eta},
          {"last_grad", matrix_to_json(last_grad)}};
}

OptimisticState OptimisticState::from_json(const nlohmann::json& j) {
  OptimisticState s{DraftParams::from_json(j.at("committed")),
                    DraftParams::from_json(j.at("played")),
                    j.at("eta").get<double>(),
                    matrix_from_json(j.at("last_grad"))};
  require_eta(s.eta);
  require_shape(s.last_grad, s.committed, "OptimisticState::from_json");
  return s;
}

DraftParams optimistic_play_with_hint(OptimisticState& state,
                                      const Matrix& hint) {
  require_shape(hint, state.committed, "optimistic_play");
  state.played = project(state.committed.matrix() - state.eta * hint,
                         state.committed.radius());
  return state.played;
}

DraftParams optimistic_play(OptimisticState& state) {
  return optimistic_play_with_hint(state, state.last_grad);
}

OptimisticState optimistic_commit(const OptimisticState& state,
                                  const Matrix& grad) {
  require_shape(grad, state.committed, "optimistic_commit");
  OptimisticState next = state;
  next.committed = project(state.committed.matrix() - state.eta * grad,
                           state.committed.radius());
  next.last_grad = grad;
  return next;
}

StepSizes make_step_sizes(double radius, double grad_bound, long horizon) {
  if (!(radius > 0.0) || !(grad_bound > 0.0) || horizon < 1) {
    throw std::invalid_argument("make_step_sizes: need D, G > 0 and T >= 1");
  }
  const double t = static_cast<double>(horizon);
  StepSizes out;
  out.count = static_cast<int>(std::ceil(0.5 * std::log2(1.0 + t))) + 1;
  const double base = radius / (grad_bound * std::sqrt(t));
  for (int i = 0; i < out.count; ++i) out.etas.push_back(std::ldexp(base, i));
  return out;
}

std::vector<double> hedge_weights(std::span<const double> cum_losses,
                                  double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("hedge_weights: epsilon must be positive");
  }
  if (cum_losses.empty()) {
    throw std::invalid_argument("hedge_weights: no learners");
  }
  const double lo = *std::min_element(cum_losses.begin(), cum_losses.end());
  std::vector<double> w(cum_losses.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(-epsilon * (cum_losses[i] - lo));
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

double default_hedge_epsilon(int learners, long horizon) {
  if (learners < 2 || horizon < 1) {
    throw std::invalid_argument("default_hedge_epsilon: need N >= 2, T >= 1");
  }
  return std::sqrt(8.0 * std::log(static_cast<double>(learners)) /
                   static_cast<double>(horizon));
}

EnsembleState EnsembleState::start(const DraftParams& init,
                                   std::span<const double> etas,
                                   double epsilon) {
  if (etas.size() < 2) {
    throw std::invalid_argument("EnsembleState: need at least two base learners");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("EnsembleState: epsilon must be positive");
  }
  EnsembleState s{{}, std::vector<double>(etas.size(), 0.0), epsilon, {}};
  for (double eta : etas) {
    require_eta(eta);
    s.bases.push_back({init, eta});
  }
  s.weights = hedge_weights(s.cum_losses, epsilon);
  return s;
}

nlohmann::json EnsembleState::to_json() const {
  nlohmann::json bj = nlohmann::json::array();
  for (const auto& b : bases) bj.push_back(b.to_json());
  return {{"bases", bj},
          {"cum_losses", cum_losses},
          {"epsilon", epsilon},
          {"weights", weights}};
}

EnsembleState EnsembleState::from_json(const nlohmann::json& j) {
  EnsembleState s;
  for (const auto& b : j.at("bases")) s.bases.push_back(OgdState::from_json(b));
  s.cum_losses = j.at("cum_losses").get<std::vector<double>>();
  s.epsilon = j.at("epsilon").get<double>();
  s.weights = j.at("weights").get<std::vector<double>>();
  if (s.bases.size() < 2 || s.cum_losses.size() != s.bases.size() ||
      s.weights.size() != s.bases.size()) {
    throw DimensionMismatch("EnsembleState::from_json: inconsistent sizes");
  }
  return s;
}

DraftParams ensemble_play(const EnsembleState& state) {
  const std::vector<double> w = hedge_weights(state.cum_losses, state.epsilon);
  const DraftParams& first = state.bases.front().params;
  Matrix avg = Matrix::Zero(first.vocab_size(), first.dim());
  for (std::size_t i = 0; i < state.bases.size(); ++i) {
    avg.noalias() += w[i] * state.bases[i].params.matrix();
  }
  // Convexity keeps avg in the ball; project only absorbs rounding.
  return project(avg, first.radius());
}

EnsembleRound ensemble_round(const EnsembleState& state, const LossFn& loss,
                             const GradFn& grad) {
  EnsembleState next = state;
  next.weights = hedge_weights(state.cum_losses, state.epsilon);
  DraftParams combined = ensemble_play(state);
  for (std::size_t i = 0; i < next.bases.size(); ++i) {
    const DraftParams& w = state.bases[i].params;
    next.cum_losses[i] += std::min(loss(w), kHedgeLossClip);
    next.bases[i] = ogd_update(state.bases[i], grad(w));
  }
  return {std::move(combined), std::move(next)};
}

}  // namespace odsim
