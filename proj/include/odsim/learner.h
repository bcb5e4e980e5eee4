#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "odsim/draft_model.h"
#include "odsim/learners.h"
#include "odsim/rng.h"

namespace odsim {

enum class LearnerType { kFrozen, kOgd, kOptimistic, kEnsemble, kDpo };

std::string learner_name(LearnerType type);
LearnerType parse_learner(const std::string& name);

struct LearnerConfig {
  LearnerType type = LearnerType::kOgd;
  std::optional<double> eta;      // nullopt: D / (G sqrt(T))
  std::optional<double> epsilon;  // nullopt: sqrt(8 ln N / T)
  double grad_bound = 1.4142135623730951;  // G
  bool frozen_at_comparator = false;
  double beta = 0.5;
  int dpo_batch = 4;
  int dpo_length = 4;
  double dpo_temperature = 4.0;  // entropy raise for dispreferred samples
};

// Full-information feedback for one round.
struct RoundFeedback {
  const FeatureVector& phi;
  const Categorical& target;
};

// A draft-model update scheme seen from the round loop: play parameters, then
// observe the round's loss.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;

  virtual DraftParams play() = 0;
  virtual void observe(const RoundFeedback& feedback) = 0;
  virtual nlohmann::json state() const = 0;
  virtual void restore(const nlohmann::json& state) = 0;
};

struct LearnerSetup {
  int vocab_size;
  int dim;
  double radius;
  long horizon;
  std::uint64_t seed;  // only the DPO learner draws randomness
  std::optional<DraftParams> comparator_init;
};

std::unique_ptr<OnlineLearner> make_learner(const LearnerConfig& cfg,
                                            const LearnerSetup& setup);

}  // namespace odsim
