#pragma once

#include <cstdint>
#include <vector>

#include "odsim/categorical.h"

namespace odsim::mc {

// Aggregate over many independent rounds of draft/verify with a fixed
// (p, q, k). All fields are integer counts so chunked reductions are exact.
struct PairStats {
  long rounds = 0;
  long accepted_total = 0;
  long emitted_total = 0;
  long emitted_sq_total = 0;
  long accept_trials = 0;
  long accept_hits = 0;
  long bonus_rounds = 0;
  std::vector<long> token_counts;                  // over all emitted tokens
  std::vector<std::vector<long>> position_counts;  // [position][token]

  void merge(const PairStats& other);
  double mean_emitted() const;
  double emitted_std_error() const;

  friend bool operator==(const PairStats&, const PairStats&) = default;
};

// Rounds are split into fixed chunks of kChunkRounds; chunk c draws from
// Rng(derive_seed(seed, c)). Serial and parallel variants therefore produce
// identical results for any thread count.
inline constexpr long kChunkRounds = 1L << 14;

PairStats simulate_pair_serial(const Categorical& p, const Categorical& q,
                               int k, long rounds, std::uint64_t seed);

PairStats simulate_pair_parallel(const Categorical& p, const Categorical& q,
                                 int k, long rounds, std::uint64_t seed,
                                 int threads);

}  // namespace odsim::mc
