#include "odsim/metrics.h"

#include <gtest/gtest.h>

#include <cmath>

namespace odsim {
namespace {

TEST(RegretTest, Arithmetic) {
  std::vector<RoundRecord> r(1);
  r[0].loss = 1.0;
  r[0].comparator_loss = 0.3;
  EXPECT_NEAR(dynamic_regret(r), 0.7, 1e-15);
  r[0].loss = 0.3;
  EXPECT_EQ(dynamic_regret(r), 0.0);
  EXPECT_THROW(dynamic_regret(std::vector<RoundRecord>{}), std::invalid_argument);
}

TEST(AccelerationTest, Examples) {
  EXPECT_NEAR(acceleration_rate(30, 10, 4, 0.1), 30.0 / 14.0, 1e-15);
  EXPECT_NEAR(acceleration_rate(4 * 100, 100, 4, 0.05), 4 / 1.2, 1e-15);
  EXPECT_LT(acceleration_rate(100, 100, 4, 0.05), 1.0);
  EXPECT_THROW(acceleration_rate(1, 0, 4, 0.1), std::invalid_argument);
}

TEST(ExpectedEmittedTest, Examples) {
  EXPECT_EQ(expected_emitted(0.0, 5), 1.0);
  EXPECT_NEAR(expected_emitted(0.5, 3), 1.875, 1e-15);
  EXPECT_EQ(expected_emitted(1.0, 3), 4.0);
  EXPECT_NEAR(expected_emitted(1.0 - 1e-12, 3), 4.0, 1e-9);
  EXPECT_THROW(expected_emitted(1.5, 3), std::invalid_argument);
}

TEST(OptimalKTest, ClosedForm) {
  EXPECT_NEAR(optimal_k_closed_form(0.8, 0.05, 64), 4.90, 0.005);
  EXPECT_NEAR(optimal_k_closed_form(0.95, 0.05, 64), 14.93, 0.005);
  EXPECT_EQ(optimal_k_closed_form(1.0, 0.05, 16), 16.0);
}

TEST(OptimalKTest, GridArgmax) {
  EXPECT_EQ(optimal_k_exact(0.8, 0.05, 64), 9);
  EXPECT_EQ(optimal_k_exact(0.0, 0.05, 64), 1);
  EXPECT_EQ(optimal_k_exact(1.0, 0.05, 16), 16);
  const int a = optimal_k_exact(0.5, 0.05, 64);
  const int b = optimal_k_exact(0.7, 0.05, 64);
  const int c = optimal_k_exact(0.9, 0.05, 64);
  EXPECT_LE(a, b);
  EXPECT_LE(b, c);
}

TEST(OptimalKTest, RoundGammaMatchesDefinition) {
  for (int k = 1; k <= 20; ++k) {
    EXPECT_NEAR(round_gamma(0.8, k, 0.05), (1 - std::pow(0.8, k)) / (0.2 * (0.05 * k + 1)), 1e-12);
  }
}

std::vector<RoundRecord> records(int T, int k, int accepted, double loss, double comp) {
  std::vector<RoundRecord> r(T);
  for (int t = 0; t < T; ++t) {
    r[t].t = t;
    r[t].k_used = k;
    r[t].n_accepted = accepted;
    r[t].emitted = accepted + 1;
    r[t].loss = loss;
    r[t].comparator_loss = comp;
  }
  return r;
}

TEST(Lemma1Test, CapAndPerfectDraft) {
  const auto perfect = records(50, 4, 4, 0.5, 0.5);
  const Lemma1Diagnostic d = lemma1_bound_check(perfect, 4);
  EXPECT_TRUE(d.cap_holds);
  EXPECT_EQ(d.accepted_total, 200);
  EXPECT_EQ(d.ratio, 0.0);
  const auto lossy = records(100, 4, 2, 1.0, 0.5);
  const Lemma1Diagnostic e = lemma1_bound_check(lossy, 4);
  EXPECT_NEAR(e.regret, 50.0, 1e-12);
  EXPECT_NEAR(e.ratio, 200 * std::sqrt(50.0) / 1000.0, 1e-12);
}

TEST(SummaryTest, Accounting) {
  const auto r = records(10, 4, 3, 0.9, 0.4);
  const RunSummary s = summarize(r, 1.5, 0.1);
  EXPECT_EQ(s.T, 10);
  EXPECT_EQ(s.emitted_total, s.accepted_total + s.T);
  EXPECT_NEAR(s.gamma_accepted, acceleration_rate(30, 10, 4, 0.1), 1e-15);
  EXPECT_NEAR(s.gamma_emitted, acceleration_rate(40, 10, 4, 0.1), 1e-15);
  EXPECT_NEAR(s.sim_wallclock, 10 * 1.4, 1e-12);
  EXPECT_LE(s.gamma_accepted, 4 / 1.4);
  const RunSummary back = RunSummary::from_json(nlohmann::json::parse(s.to_json().dump()));
  EXPECT_EQ(back.to_json(), s.to_json());
}

}  // namespace
}  // namespace odsim
