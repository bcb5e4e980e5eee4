#include "odsim/learners.h"

#include <gtest/gtest.h>

#include <cmath>

#include "odsim/environment.h"
#include "odsim/learner.h"

namespace odsim {
namespace {

Matrix random_matrix(int rows, int cols, double norm, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.gaussian();
  return m * (norm / m.norm());
}

std::vector<EnvStep> small_stream(Regime regime, long T, std::uint64_t seed) {
  EnvConfig e;
  e.regime = regime;
  e.T = T;
  e.vocab_size = 6;
  e.dim = 3;
  e.drift_rate = 0.05;
  e.seed = seed;
  return generate_stream(e);
}

TEST(OgdTest, ZeroGradientKeepsState) {
  Rng rng(1);
  const OgdState s{DraftParams(random_matrix(3, 2, 1.0, rng), 5.0), 0.3};
  const OgdState next = ogd_update(s, Matrix::Zero(3, 2));
  EXPECT_EQ(next.params, s.params);
  EXPECT_EQ(next.eta, 0.3);
}

TEST(OgdTest, InteriorStepIsUnprojected) {
  Rng rng(2);
  const Matrix w = random_matrix(3, 2, 1.0, rng);
  const Matrix g = random_matrix(3, 2, 1.0, rng);
  const OgdState next = ogd_update({DraftParams(w, 5.0), 0.1}, g);
  EXPECT_EQ(next.params.matrix(), w - 0.1 * g);
}

TEST(OgdTest, DescendsOnStationaryInstance) {
  const auto stream = small_stream(Regime::kStationary, 1, 3);
  const EnvStep& s = stream.front();
  OgdState st{DraftParams::zeros(6, 3, 5.0), 1.0};
  const double before = ce_loss(st.params, s.phi, s.target);
  for (int t = 0; t < 200; ++t) st = ogd_update(st, ce_grad(st.params, s.phi, s.target));
  EXPECT_LT(ce_loss(st.params, s.phi, s.target), before);
}

TEST(OgdTest, ShapeMismatch) {
  EXPECT_THROW(ogd_update({DraftParams::zeros(3, 2, 1.0), 0.1}, Matrix::Zero(2, 3)),
               std::invalid_argument);
}

TEST(OptimisticTest, FirstRoundPlaysCommitted) {
  Rng rng(4);
  OptimisticState st = OptimisticState::start(DraftParams(random_matrix(3, 2, 2.0, rng), 5.0), 0.5);
  EXPECT_EQ(optimistic_play(st), st.committed);
}

TEST(OptimisticTest, ZeroGradientCommit) {
  OptimisticState st = OptimisticState::start(DraftParams::zeros(3, 2, 5.0), 0.5);
  const OptimisticState next = optimistic_commit(st, Matrix::Zero(3, 2));
  EXPECT_EQ(next.committed, st.committed);
  EXPECT_EQ(next.last_grad.norm(), 0.0);
}

TEST(OptimisticTest, ZeroHintReducesToOgd) {
  const auto stream = small_stream(Regime::kDrift, 100, 5);
  OptimisticState opt = OptimisticState::start(DraftParams::zeros(6, 3, 5.0), 0.8);
  OgdState ogd{DraftParams::zeros(6, 3, 5.0), 0.8};
  for (const auto& s : stream) {
    const DraftParams played = optimistic_play_with_hint(opt, Matrix::Zero(6, 3));
    ASSERT_EQ(played, ogd.params);
    opt = optimistic_commit(opt, ce_grad(played, s.phi, s.target));
    ogd = ogd_update(ogd, ce_grad(ogd.params, s.phi, s.target));
    ASSERT_EQ(opt.committed, ogd.params);
  }
}

TEST(OptimisticTest, PlayedStaysInBall) {
  Rng rng(6);
  OptimisticState st = OptimisticState::start(DraftParams(random_matrix(3, 2, 4.9, rng), 5.0), 2.0);
  st.last_grad = random_matrix(3, 2, 50.0, rng);
  EXPECT_LE(optimistic_play(st).matrix().norm(), 5.0 * (1 + 1e-12));
}

TEST(OptimisticTest, JsonRoundTrip) {
  Rng rng(7);
  OptimisticState st = OptimisticState::start(DraftParams(random_matrix(3, 2, 2.0, rng), 5.0), 0.25);
  st = optimistic_commit(st, random_matrix(3, 2, 1.0, rng));
  optimistic_play(st);
  const OptimisticState back =
      OptimisticState::from_json(nlohmann::json::parse(st.to_json().dump()));
  EXPECT_EQ(back.committed, st.committed);
  EXPECT_EQ(back.played, st.played);
  EXPECT_EQ(back.last_grad, st.last_grad);
  EXPECT_EQ(back.eta, st.eta);
}

TEST(StepSizesTest, Examples) {
  const StepSizes s = make_step_sizes(1.0, 1.0, 100);
  ASSERT_EQ(s.count, 5);
  const std::vector<double> want = {0.1, 0.2, 0.4, 0.8, 1.6};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(s.etas[i], want[i], 1e-15);
  const StepSizes one = make_step_sizes(3.0, 1.5, 1);
  ASSERT_EQ(one.count, 2);
  EXPECT_DOUBLE_EQ(one.etas[0], 2.0);
  EXPECT_DOUBLE_EQ(one.etas[1], 4.0);
  const StepSizes big = make_step_sizes(5.0, std::sqrt(2.0), 10'000);
  for (std::size_t i = 1; i < big.etas.size(); ++i) {
    EXPECT_DOUBLE_EQ(big.etas[i] / big.etas[i - 1], 2.0);
  }
}

TEST(HedgeTest, Weights) {
  const std::vector<double> equal = {2.0, 2.0, 2.0};
  for (double w : hedge_weights(equal, 0.7)) EXPECT_NEAR(w, 1.0 / 3, 1e-15);
  const std::vector<double> two = {0.0, std::log(3.0)};
  const auto w = hedge_weights(two, 1.0);
  EXPECT_NEAR(w[0], 0.75, 1e-15);
  EXPECT_NEAR(w[1], 0.25, 1e-15);
  const std::vector<double> shifted = {100.0, 100.0 + std::log(3.0)};
  EXPECT_NEAR(hedge_weights(shifted, 1.0)[0], w[0], 1e-14);
  EXPECT_THROW(hedge_weights(two, 0.0), std::invalid_argument);
}

TEST(EnsembleTest, IdenticalBasesCombineToThemselves) {
  Rng rng(8);
  const DraftParams init(random_matrix(3, 2, 2.0, rng), 5.0);
  EnsembleState st = EnsembleState::start(init, std::vector<double>{0.1, 0.2, 0.4}, 1.0);
  st.cum_losses = {0.0, 5.0, 1.0};
  EXPECT_LE((ensemble_play(st).matrix() - init.matrix()).norm(), 1e-15);
}

TEST(EnsembleTest, PinnedOptimumWinsWeight) {
  const auto stream = small_stream(Regime::kStationary, 500, 9);
  const DraftParams optimum = stream.front().comparator;
  Rng rng(9);
  EnsembleState st = EnsembleState::start(DraftParams::zeros(6, 3, 5.0),
                                          std::vector<double>{1e-12, 1e-12, 1e-12}, 1.0);
  st.bases[0].params = optimum;
  st.bases[1].params = DraftParams(random_matrix(6, 3, 4.0, rng), 5.0);
  st.bases[2].params = DraftParams(random_matrix(6, 3, 4.0, rng), 5.0);
  for (const auto& s : stream) {
    auto loss = [&](const DraftParams& w) { return ce_loss(w, s.phi, s.target); };
    auto grad = [&](const DraftParams& w) { return ce_grad(w, s.phi, s.target); };
    EnsembleRound r = ensemble_round(st, loss, grad);
    ASSERT_LE(r.combined.matrix().norm(), 5.0 * (1 + 1e-12));
    st = std::move(r.next);
  }
  EXPECT_GT(hedge_weights(st.cum_losses, st.epsilon)[0], 0.9);
}

TEST(EnsembleTest, NeedsTwoBases) {
  EXPECT_THROW(EnsembleState::start(DraftParams::zeros(3, 2, 1.0), std::vector<double>{0.1}, 1.0),
               std::invalid_argument);
}

TEST(LearnerTest, NamesRoundTrip) {
  for (auto t : {LearnerType::kFrozen, LearnerType::kOgd, LearnerType::kOptimistic,
                 LearnerType::kEnsemble, LearnerType::kDpo}) {
    EXPECT_EQ(parse_learner(learner_name(t)), t);
  }
  EXPECT_THROW(parse_learner("sgd"), std::invalid_argument);
}

TEST(LearnerTest, ResumeMatchesUninterrupted) {
  const auto stream = small_stream(Regime::kDrift, 60, 10);
  for (auto t : {LearnerType::kOgd, LearnerType::kOptimistic, LearnerType::kEnsemble,
                 LearnerType::kDpo}) {
    LearnerConfig cfg;
    cfg.type = t;
    const LearnerSetup setup{6, 3, 5.0, 60, 3, std::nullopt};
    auto a = make_learner(cfg, setup);
    auto b = make_learner(cfg, setup);
    for (int i = 0; i < 60; ++i) {
      if (i == 30) {
        auto c = make_learner(cfg, setup);
        c->restore(nlohmann::json::parse(b->state().dump()));
        b = std::move(c);
      }
      ASSERT_EQ(a->play(), b->play());
      a->observe({stream[i].phi, stream[i].target});
      b->observe({stream[i].phi, stream[i].target});
    }
    EXPECT_EQ(a->state().dump(), b->state().dump()) << learner_name(t);
  }
}

TEST(LearnerTest, RestoreRejectsOtherType) {
  LearnerConfig ogd;
  LearnerConfig frozen;
  frozen.type = LearnerType::kFrozen;
  const LearnerSetup setup{4, 2, 5.0, 10, 1, std::nullopt};
  auto a = make_learner(ogd, setup);
  EXPECT_THROW(a->restore(make_learner(frozen, setup)->state()), std::invalid_argument);
}

}  // namespace
}  // namespace odsim
