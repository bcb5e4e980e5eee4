#pragma once

#include <functional>
#include <string>
#include <vector>

namespace odsim::validation {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  std::string tolerance;
  std::string detail;
  double seconds = 0.0;
};

struct Check {
  std::string name;
  bool quick;  // part of `validate --quick`
  std::function<CheckResult(int jobs)> run;
};

// Every check the `validate` subcommand runs, in execution order.
const std::vector<Check>& all_checks();

std::vector<CheckResult> run_checks(bool quick, int jobs);

std::string format_result(const CheckResult& r);

// Individual suites, exposed for the acceptance tests.
CheckResult check_losslessness_exact();
CheckResult check_losslessness_monte_carlo(int jobs);
CheckResult check_acceptance_identity();
CheckResult check_accept_frequency(int jobs);
CheckResult check_expected_emitted(int jobs);
CheckResult check_accepted_cap();
CheckResult check_ce_grad();
CheckResult check_dpo_grad();
CheckResult check_pinsker();
CheckResult check_residual_identity();
CheckResult check_realizability_identity();
CheckResult check_ogd_regret_slope(int jobs);
CheckResult check_optimism(int jobs);
CheckResult check_ensemble_regimes(int jobs);
CheckResult check_ensemble_hedge_bound(int jobs);
CheckResult check_gamma_cap(int jobs);
CheckResult check_gamma_adapted_vs_frozen(int jobs);
CheckResult check_gamma_vs_horizon(int jobs);
CheckResult check_optimal_k_scaling();
CheckResult check_optimal_k_ratio();
CheckResult check_dynamic_k(int jobs);
CheckResult check_determinism();
CheckResult check_state_resume();

}  // namespace odsim::validation
