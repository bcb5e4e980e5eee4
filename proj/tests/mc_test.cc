#include "odsim/mc.h"

#include <gtest/gtest.h>

#include "odsim/metrics.h"

namespace odsim {
namespace {

const Categorical kP({0.1, 0.2, 0.3, 0.4});
const Categorical kQ({0.4, 0.3, 0.2, 0.1});

TEST(MonteCarloTest, ParallelMatchesSerialReference) {
  const long rounds = 3 * mc::kChunkRounds + 123;
  const mc::PairStats serial = mc::simulate_pair_serial(kP, kQ, 3, rounds, 5);
  for (int threads : {1, 2, 3, 8}) {
    EXPECT_EQ(mc::simulate_pair_parallel(kP, kQ, 3, rounds, 5, threads), serial);
  }
}

TEST(MonteCarloTest, Accounting) {
  const mc::PairStats s = mc::simulate_pair_serial(kP, kQ, 5, 20'000, 9);
  EXPECT_EQ(s.rounds, 20'000);
  EXPECT_EQ(s.emitted_total, s.accepted_total + s.rounds);
  EXPECT_LE(s.accepted_total, 5 * s.rounds);
  EXPECT_EQ(s.accept_hits, s.accepted_total);
  long tokens = 0;
  for (long c : s.token_counts) tokens += c;
  EXPECT_EQ(tokens, s.emitted_total);
  EXPECT_NEAR(s.mean_emitted(), expected_emitted(acceptance_rate(kP, kQ), 5),
              3 * s.emitted_std_error());
}

TEST(MonteCarloTest, EveryPositionHasMarginalP) {
  const mc::PairStats s = mc::simulate_pair_serial(kP, kQ, 2, 200'000, 13);
  for (const auto& pos : s.position_counts) {
    long n = 0;
    for (long c : pos) n += c;
    for (std::size_t x = 0; x < kP.size(); ++x) {
      const double sigma = std::sqrt(kP[x] * (1 - kP[x]) / n);
      EXPECT_NEAR(static_cast<double>(pos[x]) / n, kP[x], 4 * sigma);
    }
  }
}

}  // namespace
}  // namespace odsim
