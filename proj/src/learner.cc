#include "odsim/learner.h"

#include <cmath>
#include <stdexcept>

#include "odsim/errors.h"

namespace odsim {

namespace {

void require_type(const nlohmann::json& state, LearnerType type) {
  const std::string got = state.at("type").get<std::string>();
  if (got != learner_name(type)) {
    throw std::invalid_argument("learner state is for '" + got + "', expected '" +
                                learner_name(type) + "'");
  }
}

class FrozenLearner final : public OnlineLearner {
 public:
  explicit FrozenLearner(DraftParams params) : params_(std::move(params)) {}

  DraftParams play() override { return params_; }
  void observe(const RoundFeedback&) override {}
  nlohmann::json state() const override {
    return {{"type", learner_name(LearnerType::kFrozen)}, {"params", params_.to_json()}};
  }
  void restore(const nlohmann::json& state) override {
    require_type(state, LearnerType::kFrozen);
    params_ = DraftParams::from_json(state.at("params"));
  }

 private:
  DraftParams params_;
};

class OgdLearner final : public OnlineLearner {
 public:
  explicit OgdLearner(OgdState state) : state_(std::move(state)) {}

  DraftParams play() override { return state_.params; }
  void observe(const RoundFeedback& fb) override {
    state_ = ogd_update(state_, ce_grad(state_.params, fb.phi, fb.target));
  }
  nlohmann::json state() const override {
    return {{"type", learner_name(LearnerType::kOgd)}, {"ogd", state_.to_json()}};
  }
  void restore(const nlohmann::json& state) override {
    require_type(state, LearnerType::kOgd);
    state_ = OgdState::from_json(state.at("ogd"));
  }

 private:
  OgdState state_;
};

class OptimisticLearner final : public OnlineLearner {
 public:
  explicit OptimisticLearner(OptimisticState state) : state_(std::move(state)) {}

  DraftParams play() override { return optimistic_play(state_); }
  void observe(const RoundFeedback& fb) override {
    state_ = optimistic_commit(state_, ce_grad(state_.played, fb.phi, fb.target));
  }
  nlohmann::json state() const override {
    return {{"type", learner_name(LearnerType::kOptimistic)},
            {"optimistic", state_.to_json()}};
  }
  void restore(const nlohmann::json& state) override {
    require_type(state, LearnerType::kOptimistic);
    state_ = OptimisticState::from_json(state.at("optimistic"));
  }

 private:
  OptimisticState state_;
};

class EnsembleLearner final : public OnlineLearner {
 public:
  explicit EnsembleLearner(EnsembleState state) : state_(std::move(state)) {}

  DraftParams play() override { return ensemble_play(state_); }
  void observe(const RoundFeedback& fb) override {
    auto loss = [&](const DraftParams& w) { return ce_loss(w, fb.phi, fb.target); };
    auto grad = [&](const DraftParams& w) { return ce_grad(w, fb.phi, fb.target); };
    state_ = ensemble_round(state_, loss, grad).next;
  }
  nlohmann::json state() const override {
    return {{"type", learner_name(LearnerType::kEnsemble)},
            {"ensemble", state_.to_json()}};
  }
  void restore(const nlohmann::json& state) override {
    require_type(state, LearnerType::kEnsemble);
    state_ = EnsembleState::from_json(state.at("ensemble"));
  }

 private:
  EnsembleState state_;
};

// OGD on the preference loss. Each round builds a synthetic batch: the chosen
// response is drawn from p_t, the rejected one from p_t flattened by
// `temperature`; every position shares the round's features.
class DpoLearner final : public OnlineLearner {
 public:
  DpoLearner(OgdState state, const LearnerConfig& cfg, std::uint64_t seed)
      : state_(std::move(state)),
        ref_(state_.params),
        beta_(cfg.beta),
        batch_(cfg.dpo_batch),
        length_(cfg.dpo_length),
        temperature_(cfg.dpo_temperature),
        rng_(seed) {}

  DraftParams play() override { return state_.params; }

  void observe(const RoundFeedback& fb) override {
    const std::size_t vocab = fb.target.size();
    std::vector<double> flat(vocab);
    double total = 0.0;
    for (std::size_t x = 0; x < vocab; ++x) {
      flat[x] = fb.target[x] > 0.0 ? std::pow(fb.target[x], 1.0 / temperature_) : 0.0;
      total += flat[x];
    }
    for (double& v : flat) v /= total;

    std::vector<PreferenceTuple> batch(static_cast<std::size_t>(batch_));
    for (auto& tuple : batch) {
      tuple.features.assign(static_cast<std::size_t>(length_), fb.phi);
      for (int i = 0; i < length_; ++i) {
        tuple.chosen.push_back(sample(fb.target, rng_));
        tuple.rejected.push_back(sample_index(flat, rng_.uniform()));
      }
    }
    state_ = ogd_update(state_, dpo_loss_grad(state_.params, ref_, batch, beta_).grad);
  }

  nlohmann::json state() const override {
    return {{"type", learner_name(LearnerType::kDpo)},
            {"ogd", state_.to_json()},
            {"ref", ref_.to_json()},
            {"rng", rng_.save()}};
  }
  void restore(const nlohmann::json& state) override {
    require_type(state, LearnerType::kDpo);
    state_ = OgdState::from_json(state.at("ogd"));
    ref_ = DraftParams::from_json(state.at("ref"));
    rng_.load(state.at("rng").get<std::string>());
  }

 private:
  OgdState state_;
  DraftParams ref_;
  double beta_;
  int batch_;
  int length_;
  double temperature_;
  Rng rng_;
};

}  // namespace

std::string learner_name(LearnerType type) {
  switch (type) {
    case LearnerType::kFrozen: return "frozen";
    case LearnerType::kOgd: return "ogd";
    case LearnerType::kOptimistic: return "optimistic";
    case LearnerType::kEnsemble: return "ensemble";
    case LearnerType::kDpo: return "dpo";
  }
  return "unknown";
}

LearnerType parse_learner(const std::string& name) {
  for (auto t : {LearnerType::kFrozen, LearnerType::kOgd, LearnerType::kOptimistic,
                 LearnerType::kEnsemble, LearnerType::kDpo}) {
    if (learner_name(t) == name) return t;
  }
  throw std::invalid_argument("unknown learner '" + name + "'");
}

std::unique_ptr<OnlineLearner> make_learner(const LearnerConfig& cfg,
                                            const LearnerSetup& setup) {
  if (setup.horizon < 1) throw std::invalid_argument("make_learner: horizon < 1");
  if (!(cfg.grad_bound > 0.0)) throw std::invalid_argument("make_learner: G <= 0");
  DraftParams init = DraftParams::zeros(setup.vocab_size, setup.dim, setup.radius);
  if (cfg.frozen_at_comparator) {
    if (!setup.comparator_init) {
      throw std::invalid_argument("make_learner: comparator init requested but absent");
    }
    init = *setup.comparator_init;
  }
  const double eta = cfg.eta.value_or(
      setup.radius / (cfg.grad_bound * std::sqrt(static_cast<double>(setup.horizon))));
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("make_learner: eta must be positive");
  }

  switch (cfg.type) {
    case LearnerType::kFrozen:
      return std::make_unique<FrozenLearner>(init);
    case LearnerType::kOgd:
      return std::make_unique<OgdLearner>(OgdState{init, eta});
    case LearnerType::kOptimistic:
      return std::make_unique<OptimisticLearner>(OptimisticState::start(init, eta));
    case LearnerType::kEnsemble: {
      const StepSizes sizes = make_step_sizes(setup.radius, cfg.grad_bound, setup.horizon);
      const double eps =
          cfg.epsilon.value_or(default_hedge_epsilon(sizes.count, setup.horizon));
      return std::make_unique<EnsembleLearner>(EnsembleState::start(init, sizes.etas, eps));
    }
    case LearnerType::kDpo:
      if (!(cfg.beta >= 0.0) || cfg.dpo_batch < 1 || cfg.dpo_length < 1 ||
          !(cfg.dpo_temperature > 0.0)) {
        throw std::invalid_argument("make_learner: invalid DPO settings");
      }
      return std::make_unique<DpoLearner>(OgdState{init, eta}, cfg, setup.seed);
  }
  throw std::invalid_argument("make_learner: unknown learner type");
}

}  // namespace odsim
