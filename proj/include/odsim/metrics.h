#pragma once

#include <span>

#include <json.hpp>

namespace odsim {

struct RoundRecord {
  long t = 0;
  double loss = 0.0;
  double comparator_loss = 0.0;
  int n_accepted = 0;
  int emitted = 0;
  double acc_true = 0.0;
  double tv = 0.0;
  double kl = 0.0;
  int k_used = 0;
};

struct RunSummary {
  long T = 0;
  double regret = 0.0;
  double path_length = 0.0;
  long accepted_total = 0;
  long emitted_total = 0;
  double gamma_accepted = 0.0;
  double gamma_emitted = 0.0;
  double alpha = 0.0;
  double sim_wallclock = 0.0;  // target forward pass = 1 simulated second

  nlohmann::json to_json() const;
  static RunSummary from_json(const nlohmann::json& j);
};

// sum_t (f_t(w_t) - f_t(w*_t)).
double dynamic_regret(std::span<const RoundRecord> records);

// tokens / (T (alpha k + 1)).
double acceleration_rate(long tokens_total, long T, int k, double alpha);

// Expected emitted tokens per round, (1 - acc^(k+1)) / (1 - acc); k + 1 at
// acc = 1.
double expected_emitted(double acc, int k);

// Per-round acceleration objective (1 - acc^k) / ((1 - acc)(alpha k + 1)),
// continuous at acc = 1.
double round_gamma(double acc, int k, double alpha);

// C / (alpha (1 - acc)) with
// C = -1 + acc + sqrt(1 - 2acc + acc^2 + 3alpha - 4 acc alpha + acc^2 alpha).
// Returns k_max at acc == 1.
double optimal_k_closed_form(double acc, double alpha, int k_max);

// Integer argmax of round_gamma over [1, k_max]; ties go to the smaller k.
int optimal_k_exact(double acc, double alpha, int k_max);

struct Lemma1Diagnostic {
  long accepted_total = 0;
  long cap = 0;
  bool cap_holds = false;
  double regret = 0.0;
  // accepted_total / (T^{3/2} / sqrt(regret)); zero when regret is zero.
  double ratio = 0.0;
};

Lemma1Diagnostic lemma1_bound_check(std::span<const RoundRecord> records,
                                    int k);

RunSummary summarize(std::span<const RoundRecord> records, double path_length,
                     double alpha);

}  // namespace odsim
