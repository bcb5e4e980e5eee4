#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "odsim/categorical.h"
#include "odsim/draft_model.h"
#include "odsim/errors.h"
#include "odsim/rng.h"

namespace odsim {

struct SpecConfig {
  static constexpr int kMaxCandidates = 64;

  int k = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

// Result of one draft/verify round. `emitted` holds the accepted prefix
// followed by one correction token (or the bonus token when every draft was
// accepted).
struct StepOutcome {
  int n_accepted = 0;
  std::vector<int> emitted;
  std::vector<bool> accept_flags;
  bool bonus = false;

  // Acceptance tests actually evaluated: n_accepted, plus one if a rejection
  // stopped the scan.
  int accepts_evaluated() const {
    return bonus ? n_accepted : n_accepted + 1;
  }

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

namespace kernel {

// The draft/verify kernels are written against a randomness "source" so the
// same code runs on a real stream (doubles) and under exact enumeration
// (rationals, see validation/enumerate.h). A source provides
//
//   bool accept(const Real& ratio);                // r ~ U[0,1), r <= ratio
//   int sample(std::span<const Real> probs);       // one categorical draw
//
// and each call corresponds to exactly one uniform on a real stream.

template <class Real, class Source>
std::vector<int> draft(std::span<const Real> q, int k, Source& source) {
  std::vector<int> tokens;
  tokens.reserve(k);
  for (int i = 0; i < k; ++i) tokens.push_back(source.sample(q));
  return tokens;
}

template <class Real, class Source>
StepOutcome verify(std::span<const Real> p, std::span<const Real> q,
                   std::span<const int> tokens, Source& source) {
  if (p.size() != q.size()) {
    throw DimensionMismatch("verify: p and q differ in vocabulary size");
  }
  const int k = static_cast<int>(tokens.size());
  StepOutcome out;
  out.accept_flags.assign(k, false);
  out.emitted.reserve(k + 1);

  for (int j = 0; j < k; ++j) {
    const int x = tokens[j];
    if (x < 0 || static_cast<std::size_t>(x) >= q.size() || !(q[x] > Real(0))) {
      throw MalformedDraft("verify: drafted token has zero draft probability");
    }
    if (source.accept(Real(p[x] / q[x]))) {
      out.accept_flags[j] = true;
      out.emitted.push_back(x);
      continue;
    }
    // First rejection at position j: n = j, correction from max(0, p - q).
    out.n_accepted = j;
    std::vector<Real> weights(p.size());
    Real total(0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      weights[i] = p[i] > q[i] ? Real(p[i] - q[i]) : Real(0);
      total += weights[i];
    }
    if (total > Real(0)) {
      for (auto& w : weights) w /= total;
      out.emitted.push_back(source.sample(std::span<const Real>(weights)));
    } else {
      // p == q up to rounding; the rejection itself had probability zero.
      out.emitted.push_back(source.sample(p));
    }
    return out;
  }
  out.n_accepted = k;
  out.bonus = true;
  out.emitted.push_back(source.sample(p));
  return out;
}

// Source over a real random stream.
class RngSource {
 public:
  explicit RngSource(Rng& rng) : rng_(rng) {}

  bool accept(double ratio) { return rng_.uniform() <= ratio; }
  int sample(std::span<const double> probs) {
    return sample_index(probs, rng_.uniform());
  }

 private:
  Rng& rng_;
};

}  // namespace kernel

// k independent draws from q; consumes exactly k uniforms.
std::vector<int> draft_tokens(const Categorical& q, int k, Rng& rng);

// Likelihood-ratio verification of `tokens` (drafted from q) against p.
// Consumes one uniform per evaluated acceptance test plus one for the
// correction/bonus token.
StepOutcome verify_step(const Categorical& p, const Categorical& q,
                        std::span<const int> tokens, Rng& rng);

// predict -> draft_tokens -> verify_step for one round. Under the i.i.d.
// position model one (phi, p) pair serves all k positions.
StepOutcome run_round(const DraftParams& params, const FeatureVector& phi,
                      const Categorical& p, const SpecConfig& cfg, Rng& rng);

}  // namespace odsim
