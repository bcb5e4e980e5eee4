#include "odsim/validation/enumerate.h"

#include <gtest/gtest.h>

namespace odsim::validation {
namespace {

auto reference() {
  return [](std::span<const Rational> p, std::span<const Rational> q,
            std::span<const int> tokens, BranchingSource& s) {
    return kernel::verify<Rational>(p, q, tokens, s);
  };
}

// Keeps the rejected draft token instead of resampling from the residual.
auto keeps_rejected_token() {
  return [](std::span<const Rational> p, std::span<const Rational> q,
            std::span<const int> tokens, BranchingSource& s) {
    StepOutcome out = kernel::verify<Rational>(p, q, tokens, s);
    if (!out.bonus) out.emitted.back() = tokens[out.n_accepted];
    return out;
  };
}

// Off-by-one in the rejection index: reports one more accepted token than
// actually passed.
auto off_by_one() {
  return [](std::span<const Rational> p, std::span<const Rational> q,
            std::span<const int> tokens, BranchingSource& s) {
    StepOutcome out = kernel::verify<Rational>(p, q, tokens, s);
    if (!out.bonus) {
      out.emitted.insert(out.emitted.end() - 1, tokens[out.n_accepted]);
      out.n_accepted += 1;
    }
    return out;
  };
}

std::vector<Rational> r(std::initializer_list<std::pair<int, int>> xs) {
  std::vector<Rational> out;
  for (auto [n, d] : xs) out.emplace_back(n, d);
  return out;
}

TEST(EnumerateTest, SimplexGrid) {
  EXPECT_EQ(simplex_grid(2, 2).size(), 3u);
  EXPECT_EQ(simplex_grid(3, 2).size(), 6u);
  EXPECT_EQ(simplex_grid(3, 4).size(), 15u);
  for (const auto& v : simplex_grid(3, 4)) {
    Rational s(0);
    for (const auto& x : v) s += x;
    EXPECT_EQ(s, Rational(1));
  }
}

TEST(EnumerateTest, HandPair) {
  const auto p = r({{1, 2}, {3, 10}, {1, 5}});
  const auto q = r({{1, 5}, {1, 2}, {3, 10}});
  const RoundMarginals m = enumerate_round(p, q, 1, reference());
  EXPECT_EQ(m.total_mass, Rational(1));
  EXPECT_EQ(m.reach[1], Rational(7, 10));
  EXPECT_TRUE(is_lossless(m, p));
}

TEST(EnumerateTest, AllGridPairsLossless) {
  for (int den : {2, 3}) {
    for (int size : {2, 3, 4}) {
      const auto grid = simplex_grid(size, den);
      for (const auto& p : grid) {
        for (const auto& q : grid) {
          for (int k = 1; k <= 3; ++k) {
            ASSERT_TRUE(is_lossless(enumerate_round(p, q, k, reference()), p));
          }
        }
      }
    }
  }
}

TEST(EnumerateTest, MutationCanaries) {
  const auto grid = simplex_grid(3, 2);
  int caught_keep = 0, caught_shift = 0;
  for (const auto& p : grid) {
    for (const auto& q : grid) {
      if (p == q) continue;
      caught_keep += !is_lossless(enumerate_round(p, q, 2, keeps_rejected_token()), p);
      caught_shift += !is_lossless(enumerate_round(p, q, 2, off_by_one()), p);
    }
  }
  EXPECT_GT(caught_keep, 0);
  EXPECT_GT(caught_shift, 0);
}

}  // namespace
}  // namespace odsim::validation
