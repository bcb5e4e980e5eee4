#include "odsim/mc.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "odsim/parallel.h"
#include "odsim/rng.h"
#include "odsim/spec_engine.h"

namespace odsim::mc {

namespace {

PairStats empty_stats(std::size_t vocab, int k) {
  PairStats s;
  s.token_counts.assign(vocab, 0);
  s.position_counts.assign(static_cast<std::size_t>(k) + 1,
                           std::vector<long>(vocab, 0));
  return s;
}

void require_inputs(const Categorical& p, const Categorical& q, int k,
                    long rounds) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("simulate_pair: p and q differ in size");
  }
  SpecConfig{k, 0}.validate();
  if (rounds < 0) throw std::invalid_argument("simulate_pair: negative rounds");
}

PairStats run_chunk(const Categorical& p, const Categorical& q, int k,
                    long rounds, std::uint64_t seed) {
  PairStats s = empty_stats(p.size(), k);
  Rng rng(seed);
  for (long r = 0; r < rounds; ++r) {
    const std::vector<int> tokens = draft_tokens(q, k, rng);
    const StepOutcome out = verify_step(p, q, tokens, rng);
    const long emitted = static_cast<long>(out.emitted.size());
    s.rounds += 1;
    s.accepted_total += out.n_accepted;
    s.emitted_total += emitted;
    s.emitted_sq_total += emitted * emitted;
    s.accept_trials += out.accepts_evaluated();
    s.accept_hits += out.n_accepted;
    s.bonus_rounds += out.bonus ? 1 : 0;
    for (std::size_t i = 0; i < out.emitted.size(); ++i) {
      s.token_counts[out.emitted[i]] += 1;
      s.position_counts[i][out.emitted[i]] += 1;
    }
  }
  return s;
}

long chunk_count(long rounds) { return (rounds + kChunkRounds - 1) / kChunkRounds; }

long chunk_rounds(long rounds, long c) {
  return std::min(kChunkRounds, rounds - c * kChunkRounds);
}

}  // namespace

void PairStats::merge(const PairStats& other) {
  if (token_counts.size() != other.token_counts.size() ||
      position_counts.size() != other.position_counts.size()) {
    throw std::invalid_argument("PairStats::merge: shape mismatch");
  }
  rounds += other.rounds;
  accepted_total += other.accepted_total;
  emitted_total += other.emitted_total;
  emitted_sq_total += other.emitted_sq_total;
  accept_trials += other.accept_trials;
  accept_hits += other.accept_hits;
  bonus_rounds += other.bonus_rounds;
  for (std::size_t i = 0; i < token_counts.size(); ++i) {
    token_counts[i] += other.token_counts[i];
  }
  for (std::size_t j = 0; j < position_counts.size(); ++j) {
    for (std::size_t i = 0; i < position_counts[j].size(); ++i) {
      position_counts[j][i] += other.position_counts[j][i];
    }
  }
}

double PairStats::mean_emitted() const {
  return rounds > 0 ? static_cast<double>(emitted_total) / rounds : 0.0;
}

double PairStats::emitted_std_error() const {
  if (rounds < 2) return 0.0;
  const double n = static_cast<double>(rounds);
  const double mean = mean_emitted();
  const double var = (static_cast<double>(emitted_sq_total) - n * mean * mean) / (n - 1.0);
  return std::sqrt(std::max(var, 0.0) / n);
}

PairStats simulate_pair_serial(const Categorical& p, const Categorical& q,
                               int k, long rounds, std::uint64_t seed) {
  require_inputs(p, q, k, rounds);
  PairStats total = empty_stats(p.size(), k);
  for (long c = 0; c < chunk_count(rounds); ++c) {
    total.merge(run_chunk(p, q, k, chunk_rounds(rounds, c), derive_seed(seed, c)));
  }
  return total;
}

PairStats simulate_pair_parallel(const Categorical& p, const Categorical& q,
                                 int k, long rounds, std::uint64_t seed,
                                 int threads) {
  require_inputs(p, q, k, rounds);
  const long chunks = chunk_count(rounds);
  std::vector<PairStats> parts(static_cast<std::size_t>(chunks));
  parallelize(chunks, threads, [&](long c) {
    parts[c] = run_chunk(p, q, k, chunk_rounds(rounds, c), derive_seed(seed, c));
  });
  PairStats total = empty_stats(p.size(), k);
  for (const auto& part : parts) total.merge(part);
  return total;
}

}  // namespace odsim::mc
