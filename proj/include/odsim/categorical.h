#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "odsim/rng.h"

namespace odsim {

// Finite probability vector over a vocabulary of at least two tokens.
//
// Construction rejects negative or non-finite entries and any vector whose
// sum is off by more than kSumTolerance; within tolerance the entries are
// renormalized so Monte-Carlo drift never compounds.
class Categorical {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit Categorical(std::vector<double> probs);

  static Categorical uniform(std::size_t size);
  static Categorical point_mass(std::size_t size, std::size_t index);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

  friend bool operator==(const Categorical&, const Categorical&) = default;

 private:
  std::vector<double> probs_;
};

// Inverse-CDF lookup with a left-to-right cumulative scan. Never returns an
// index with zero mass.
int sample_index(std::span<const double> probs, double u);

// Draws one token; consumes exactly one uniform.
int sample(const Categorical& p, Rng& rng);

double total_variation(const Categorical& p, const Categorical& q);

// KL(p || q) in nats with 0 ln(0/q) = 0. Returns +infinity when p puts mass
// where q has none.
double kl_divergence(const Categorical& p, const Categorical& q);

// Expected probability that a token drafted from q survives verification
// against p: sum_x min(p[x], q[x]).
double acceptance_rate(const Categorical& p, const Categorical& q);

// Normalized max(0, p - q). The normalizer equals total_variation(p, q).
// Throws DegenerateInput when p and q coincide.
Categorical residual(const Categorical& p, const Categorical& q);

double entropy(const Categorical& p);

}  // namespace odsim
