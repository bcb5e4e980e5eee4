#include "odsim/spec_engine.h"

#include <string>

namespace odsim {

void SpecConfig::validate() const {
  if (k < 1 || k > kMaxCandidates) {
    throw std::invalid_argument("SpecConfig: k must lie in [1, " +
                                std::to_string(kMaxCandidates) + "], got " +
                                std::to_string(k));
  }
}

std::vector<int> draft_tokens(const Categorical& q, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("draft_tokens: k must be positive");
  kernel::RngSource source(rng);
  return kernel::draft<double>(q.probs(), k, source);
}

StepOutcome verify_step(const Categorical& p, const Categorical& q,
                        std::span<const int> tokens, Rng& rng) {
  kernel::RngSource source(rng);
  return kernel::verify<double>(p.probs(), q.probs(), tokens, source);
}

StepOutcome run_round(const DraftParams& params, const FeatureVector& phi,
                      const Categorical& p, const SpecConfig& cfg, Rng& rng) {
  cfg.validate();
  if (static_cast<int>(p.size()) != params.vocab_size()) {
    throw DimensionMismatch("run_round: target vocabulary differs from draft");
  }
  const Categorical q = predict(params, phi);
  const std::vector<int> tokens = draft_tokens(q, cfg.k, rng);
  return verify_step(p, q, tokens, rng);
}

}  // namespace odsim
