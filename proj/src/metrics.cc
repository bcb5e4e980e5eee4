#include "odsim/metrics.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace odsim {

namespace {

void require_acc(double acc, const char* op) {
  if (!(acc >= 0.0 && acc <= 1.0)) {
    throw std::invalid_argument(std::string(op) + ": acceptance rate " +
                                std::to_string(acc) + " outside [0, 1]");
  }
}

void require_alpha(double alpha, const char* op) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument(std::string(op) + ": alpha must be positive");
  }
}

// sum_{i<n} acc^i, which is the closed form (1 - acc^n) / (1 - acc) without
// the cancellation near acc = 1.
double geometric_sum(double acc, int n) {
  double total = 0.0;
  double term = 1.0;
  for (int i = 0; i < n; ++i) {
    total += term;
    term *= acc;
  }
  return total;
}

}  // namespace

nlohmann::json RunSummary::to_json() const {
  return {{"T", T},
          {"regret", regret},
          {"path_length", path_length},
          {"accepted_total", accepted_total},
          {"emitted_total", emitted_total},
          {"gamma_accepted", gamma_accepted},
          {"gamma_emitted", gamma_emitted},
          {"alpha", alpha},
          {"sim_wallclock", sim_wallclock}};
}

RunSummary RunSummary::from_json(const nlohmann::json& j) {
  RunSummary s;
  s.T = j.at("T").get<long>();
  s.regret = j.at("regret").get<double>();
  s.path_length = j.at("path_length").get<double>();
  s.accepted_total = j.at("accepted_total").get<long>();
  s.emitted_total = j.at("emitted_total").get<long>();
  s.gamma_accepted = j.at("gamma_accepted").get<double>();
  s.gamma_emitted = j.at("gamma_emitted").get<double>();
  s.alpha = j.at("alpha").get<double>();
  s.sim_wallclock = j.at("sim_wallclock").get<double>();
  return s;
}

double dynamic_regret(std::span<const RoundRecord> records) {
  if (records.empty()) throw std::invalid_argument("dynamic_regret: no records");
  double total = 0.0;
  for (const auto& r : records) total += r.loss - r.comparator_loss;
  return total;
}

double acceleration_rate(long tokens_total, long T, int k, double alpha) {
  if (T < 1) throw std::invalid_argument("acceleration_rate: T must be >= 1");
  if (k < 1) throw std::invalid_argument("acceleration_rate: k must be >= 1");
  require_alpha(alpha, "acceleration_rate");
  return static_cast<double>(tokens_total) /
         (static_cast<double>(T) * (alpha * k + 1.0));
}

double expected_emitted(double acc, int k) {
  require_acc(acc, "expected_emitted");
  if (k < 0) throw std::invalid_argument("expected_emitted: k must be >= 0");
  return geometric_sum(acc, k + 1);
}

double round_gamma(double acc, int k, double alpha) {
  require_acc(acc, "round_gamma");
  require_alpha(alpha, "round_gamma");
  if (k < 1) throw std::invalid_argument("round_gamma: k must be >= 1");
  return geometric_sum(acc, k) / (alpha * k + 1.0);
}

double optimal_k_closed_form(double acc, double alpha, int k_max) {
  require_acc(acc, "optimal_k_closed_form");
  require_alpha(alpha, "optimal_k_closed_form");
  if (acc == 1.0) return static_cast<double>(k_max);
  const double c = -1.0 + acc +
                   std::sqrt(1.0 - 2.0 * acc + acc * acc + 3.0 * alpha -
                             4.0 * acc * alpha + acc * acc * alpha);
  return c / (alpha * (1.0 - acc));
}

int optimal_k_exact(double acc, double alpha, int k_max) {
  if (k_max < 1) throw std::invalid_argument("optimal_k_exact: k_max must be >= 1");
  int best = 1;
  double best_gamma = round_gamma(acc, 1, alpha);
  for (int k = 2; k <= k_max; ++k) {
    const double g = round_gamma(acc, k, alpha);
    if (g > best_gamma) {
      best = k;
      best_gamma = g;
    }
  }
  return best;
}

Lemma1Diagnostic lemma1_bound_check(std::span<const RoundRecord> records,
                                    int k) {
  Lemma1Diagnostic d;
  for (const auto& r : records) d.accepted_total += r.n_accepted;
  const long T = static_cast<long>(records.size());
  d.cap = static_cast<long>(k) * T;
  d.cap_holds = d.accepted_total <= d.cap;
  if (T > 0) d.regret = dynamic_regret(records);
  if (d.regret > 0.0) {
    d.ratio = static_cast<double>(d.accepted_total) * std::sqrt(d.regret) /
              std::pow(static_cast<double>(T), 1.5);
  }
  return d;
}

RunSummary summarize(std::span<const RoundRecord> records, double path_length,
                     double alpha) {
  require_alpha(alpha, "summarize");
  RunSummary s;
  s.T = static_cast<long>(records.size());
  s.regret = dynamic_regret(records);
  s.path_length = path_length;
  s.alpha = alpha;
  for (const auto& r : records) {
    s.accepted_total += r.n_accepted;
    s.emitted_total += r.emitted;
    s.sim_wallclock += alpha * r.k_used + 1.0;
  }
  s.gamma_accepted = static_cast<double>(s.accepted_total) / s.sim_wallclock;
  s.gamma_emitted = static_cast<double>(s.emitted_total) / s.sim_wallclock;
  return s;
}

}  // namespace odsim
