#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "odsim/categorical.h"
#include "odsim/draft_model.h"

namespace odsim {

enum class Regime { kStationary, kDrift, kShift };

std::string regime_name(Regime regime);
Regime parse_regime(const std::string& name);

struct EnvConfig {
  Regime regime = Regime::kStationary;
  double drift_rate = 0.0;      // expected Frobenius step per round
  int shift_period = 1;         // rounds between jumps
  double shift_magnitude = 1.0; // Frobenius size of each jump
  long T = 1000;
  int vocab_size = 16;
  int dim = 8;
  double radius = 5.0;
  // Frobenius norm of the initial hidden parameters, as a fraction of radius.
  double comparator_scale = 0.8;
  // Non-realizable targets: logits get per-round gaussian noise and the
  // comparator is found by projected gradient descent.
  bool agnostic = false;
  double agnostic_noise = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EnvStep {
  FeatureVector phi;
  Categorical target;
  DraftParams comparator;
  double comparator_loss;
};

inline constexpr int kAgnosticComparatorIterations = 200;

// T rounds of (phi_t, p_t, w*_t). Features, comparator moves and agnostic
// noise use separate derived streams, so drift(rate = 0) reproduces the
// stationary stream exactly.
std::vector<EnvStep> generate_stream(const EnvConfig& cfg);

// sum_t ||w*_{t+1} - w*_t||_F.
double path_length(std::span<const EnvStep> stream);

}  // namespace odsim
