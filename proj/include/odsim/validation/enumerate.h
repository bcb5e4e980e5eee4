#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <boost/rational.hpp>

#include "odsim/spec_engine.h"

namespace odsim::validation {

using Rational = boost::rational<std::int64_t>;

// Exact outcome-tree enumeration of one draft/verify round. Each run of the
// round replays a fixed prefix of branch choices and records the branch
// points it meets after the prefix; an odometer over those points visits
// every path with nonzero probability exactly once.
class BranchingSource {
 public:
  explicit BranchingSource(std::span<const int> prefix)
      : prefix_(prefix.begin(), prefix.end()) {}

  bool accept(const Rational& ratio) {
    const Rational one(1);
    if (ratio >= one) return true;
    if (ratio <= Rational(0)) return false;
    // option 0 = accept, option 1 = reject
    const int choice = next_choice(2);
    mass_ *= choice == 0 ? ratio : one - ratio;
    return choice == 0;
  }

  int sample(std::span<const Rational> probs) {
    std::vector<int> support;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > Rational(0)) support.push_back(static_cast<int>(i));
    }
    if (support.size() == 1) return support.front();
    const int choice = next_choice(static_cast<int>(support.size()));
    mass_ *= probs[support[choice]];
    return support[choice];
  }

  const Rational& mass() const { return mass_; }
  const std::vector<int>& choices() const { return choices_; }
  const std::vector<int>& arity() const { return arity_; }

 private:
  int next_choice(int options) {
    const std::size_t at = choices_.size();
    const int choice = at < prefix_.size() ? prefix_[at] : 0;
    choices_.push_back(choice);
    arity_.push_back(options);
    return choice;
  }

  std::vector<int> prefix_;
  std::vector<int> choices_;
  std::vector<int> arity_;
  Rational mass_{1};
};

struct RoundMarginals {
  // joint[i][x] = P(len > i and emitted[i] = x)
  std::vector<std::vector<Rational>> joint;
  // reach[i] = P(len > i)
  std::vector<Rational> reach;
  Rational total_mass{0};
  long paths = 0;
};

// Enumerates draft (k tokens from q) followed by `verifier`, which must be
// callable as verifier(p, q, tokens, source) -> StepOutcome for
// Real = Rational.
template <class Verifier>
RoundMarginals enumerate_round(std::span<const Rational> p,
                               std::span<const Rational> q, int k,
                               Verifier&& verifier) {
  RoundMarginals out;
  out.joint.assign(k + 1, std::vector<Rational>(p.size(), Rational(0)));
  out.reach.assign(k + 1, Rational(0));

  std::vector<int> prefix;
  while (true) {
    BranchingSource source(prefix);
    const auto tokens = kernel::draft<Rational>(q, k, source);
    const StepOutcome outcome = verifier(p, q, std::span<const int>(tokens), source);
    const Rational mass = source.mass();
    out.total_mass += mass;
    ++out.paths;
    for (std::size_t i = 0; i < outcome.emitted.size() && i <= static_cast<std::size_t>(k); ++i) {
      out.reach[i] += mass;
      out.joint[i][outcome.emitted[i]] += mass;
    }
    // Advance the odometer over the branch points of this path.
    std::vector<int> choices = source.choices();
    const std::vector<int>& arity = source.arity();
    int pos = static_cast<int>(choices.size()) - 1;
    while (pos >= 0 && choices[pos] + 1 >= arity[pos]) --pos;
    if (pos < 0) break;
    choices.resize(pos + 1);
    ++choices[pos];
    prefix = std::move(choices);
  }
  return out;
}

// True iff P(emitted[i] = x | len > i) == p[x] exactly for every position
// and token, and the path masses sum to one.
bool is_lossless(const RoundMarginals& m, std::span<const Rational> p);

// All probability vectors of `size` entries on the grid {0, 1/den, ..., 1}.
std::vector<std::vector<Rational>> simplex_grid(int size, int den);

}  // namespace odsim::validation
