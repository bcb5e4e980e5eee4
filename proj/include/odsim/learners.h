#pragma once

#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "odsim/draft_model.h"

namespace odsim {

// Hedge inputs are clipped so +infinity KL sentinels cannot zero a weight
// vector.
inline constexpr double kHedgeLossClip = 50.0;

struct OgdState {
  DraftParams params;
  double eta;

  nlohmann::json to_json() const;
  static OgdState from_json(const nlohmann::json& j);
};

// params <- project(params - eta * grad).
OgdState ogd_update(const OgdState& state, const Matrix& grad);

// Two-step optimistic update: play project(committed - eta * hint), then
// commit project(committed - eta * grad). The hint is the last observed
// gradient (zero before the first round).
struct OptimisticState {
  DraftParams committed;
  DraftParams played;
  double eta;
  Matrix last_grad;

  static OptimisticState start(const DraftParams& init, double eta);

  nlohmann::json to_json() const;
  static OptimisticState from_json(const nlohmann::json& j);
};

DraftParams optimistic_play(OptimisticState& state);

// Same as optimistic_play but with an explicit hint in place of last_grad.
DraftParams optimistic_play_with_hint(OptimisticState& state,
                                      const Matrix& hint);

OptimisticState optimistic_commit(const OptimisticState& state,
                                  const Matrix& grad);

struct StepSizes {
  std::vector<double> etas;
  int count = 0;
};

// eta_i = 2^(i-1) D / (G sqrt(T)), i = 1..N, N = ceil(log2(1 + T) / 2) + 1.
StepSizes make_step_sizes(double radius, double grad_bound, long horizon);

// softmax(-epsilon * cum_losses).
std::vector<double> hedge_weights(std::span<const double> cum_losses,
                                  double epsilon);

// Default Hedge rate sqrt(8 ln N / T).
double default_hedge_epsilon(int learners, long horizon);

struct EnsembleState {
  std::vector<OgdState> bases;
  std::vector<double> cum_losses;
  double epsilon;
  std::vector<double> weights;

  static EnsembleState start(const DraftParams& init,
                             std::span<const double> etas, double epsilon);

  nlohmann::json to_json() const;
  static EnsembleState from_json(const nlohmann::json& j);
};

// Weighted parameter average sum_i weights[i] * bases[i].params, with the
// weights recomputed from the cumulative losses.
DraftParams ensemble_play(const EnsembleState& state);

using LossFn = std::function<double(const DraftParams&)>;
using GradFn = std::function<Matrix(const DraftParams&)>;

struct EnsembleRound {
  DraftParams combined;
  EnsembleState next;
};

// One meta/base round against the round's loss f_t: refresh weights, form the
// combined model, charge every base f_t(w_t^i) and take its OGD step.
EnsembleRound ensemble_round(const EnsembleState& state, const LossFn& loss,
                             const GradFn& grad);

}  // namespace odsim
