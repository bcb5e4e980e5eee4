#include "odsim/categorical.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "odsim/errors.h"

namespace odsim {
namespace {

const Categorical kP({0.5, 0.3, 0.2});
const Categorical kQ({0.2, 0.5, 0.3});

TEST(CategoricalTest, RejectsInvalidVectors) {
  EXPECT_THROW(Categorical({1.0}), InvalidDistribution);
  EXPECT_THROW(Categorical({0.5, 0.6}), InvalidDistribution);
  EXPECT_THROW(Categorical({1.5, -0.5}), InvalidDistribution);
  EXPECT_THROW(Categorical({std::nan(""), 1.0}), InvalidDistribution);
}

TEST(CategoricalTest, RenormalizesWithinTolerance) {
  const Categorical c({0.5 + 4e-10, 0.5});
  EXPECT_NEAR(c[0] + c[1], 1.0, 1e-15);
}

TEST(CategoricalTest, PointMassSampling) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample(Categorical({1.0, 0.0}), rng), 0);
    EXPECT_EQ(sample(Categorical({0.0, 0.0, 1.0}), rng), 2);
  }
}

TEST(CategoricalTest, SampleConsumesOneUniform) {
  Rng rng(3);
  sample(kP, rng);
  sample(kP, rng);
  EXPECT_EQ(rng.uniforms_consumed(), 2u);
}

TEST(CategoricalTest, FairCoinFrequency) {
  Rng rng(11);
  const Categorical coin({0.5, 0.5});
  long zeros = 0;
  for (int i = 0; i < 1'000'000; ++i) zeros += sample(coin, rng) == 0;
  EXPECT_GE(zeros / 1e6, 0.498);
  EXPECT_LE(zeros / 1e6, 0.502);
}

TEST(CategoricalTest, SampleIndexSkipsZeroMass) {
  const std::vector<double> p = {0.0, 0.5, 0.0, 0.5, 0.0};
  EXPECT_EQ(sample_index(p, 0.0), 1);
  EXPECT_EQ(sample_index(p, 0.4999), 1);
  EXPECT_EQ(sample_index(p, 0.5), 3);
  EXPECT_EQ(sample_index(p, 1.0 - 0x1.0p-53), 3);
}

TEST(CategoricalTest, TotalVariation) {
  EXPECT_DOUBLE_EQ(total_variation(kP, kP), 0.0);
  EXPECT_DOUBLE_EQ(total_variation(Categorical({1, 0}), Categorical({0, 1})), 1.0);
  EXPECT_NEAR(total_variation(kP, kQ), 0.3, 1e-15);
  EXPECT_THROW(total_variation(kP, Categorical({0.5, 0.5})), DimensionMismatch);
}

TEST(CategoricalTest, KlDivergence) {
  EXPECT_EQ(kl_divergence(kP, kP), 0.0);
  EXPECT_NEAR(kl_divergence(Categorical({0.5, 0.5}), Categorical({0.25, 0.75})), 0.143841, 1e-6);
  EXPECT_EQ(kl_divergence(Categorical({1, 0}), Categorical({0, 1})),
            std::numeric_limits<double>::infinity());
  EXPECT_GT(kl_divergence(kP, kQ), 0.0);
}

TEST(CategoricalTest, AcceptanceRate) {
  EXPECT_DOUBLE_EQ(acceptance_rate(kP, kP), 1.0);
  EXPECT_DOUBLE_EQ(acceptance_rate(Categorical({1, 0}), Categorical({0, 1})), 0.0);
  EXPECT_NEAR(acceptance_rate(kP, kQ), 0.7, 1e-15);
  EXPECT_NEAR(acceptance_rate(kP, kQ), 1.0 - total_variation(kP, kQ), 1e-12);
}

TEST(CategoricalTest, Residual) {
  const Categorical r = residual(kP, kQ);
  EXPECT_NEAR(r[0], 1.0, 1e-12);
  EXPECT_EQ(r[1], 0.0);
  EXPECT_EQ(r[2], 0.0);
  EXPECT_EQ(residual(Categorical({0.6, 0.4}), Categorical({0.4, 0.6})), Categorical({1, 0}));
  EXPECT_EQ(residual(Categorical({1, 0}), Categorical({0, 1})), Categorical({1, 0}));
  EXPECT_THROW(residual(kP, kP), DegenerateInput);
}

TEST(CategoricalTest, ResidualIdentity) {
  const Categorical r = residual(kP, kQ);
  const double tv = total_variation(kP, kQ);
  for (std::size_t x = 0; x < kP.size(); ++x) {
    EXPECT_NEAR(std::min(kP[x], kQ[x]) + tv * r[x], kP[x], 1e-12);
  }
}

TEST(CategoricalTest, Entropy) {
  EXPECT_NEAR(entropy(Categorical({0.5, 0.5})), std::log(2.0), 1e-15);
  EXPECT_EQ(entropy(Categorical({1.0, 0.0})), 0.0);
}

}  // namespace
}  // namespace odsim
