#include "odsim/categorical.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "odsim/errors.h"

namespace odsim {

namespace {

void require_same_size(const Categorical& p, const Categorical& q,
                       const char* op) {
  if (p.size() != q.size()) {
    throw DimensionMismatch(std::string(op) + ": vocabulary sizes " +
                            std::to_string(p.size()) + " and " +
                            std::to_string(q.size()) + " differ");
  }
}

}  // namespace

Categorical::Categorical(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) {
    throw InvalidDistribution("Categorical: vocabulary size must be >= 2");
  }
  double sum = 0.0;
  for (double v : probs_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidDistribution("Categorical: entries must be finite and >= 0");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InvalidDistribution("Categorical: entries sum to " +
                              std::to_string(sum));
  }
  if (sum != 1.0) {
    for (double& v : probs_) v /= sum;
  }
}

Categorical Categorical::uniform(std::size_t size) {
  return Categorical(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Categorical Categorical::point_mass(std::size_t size, std::size_t index) {
  std::vector<double> probs(size, 0.0);
  probs.at(index) = 1.0;
  return Categorical(std::move(probs));
}

int sample_index(std::span<const double> probs, double u) {
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last_positive = static_cast<int>(i);
    if (u < cum) return last_positive;
  }
  // Cumulative sum fell short of u through rounding.
  return last_positive;
}

int sample(const Categorical& p, Rng& rng) {
  return sample_index(p.probs(), rng.uniform());
}

double total_variation(const Categorical& p, const Categorical& q) {
  require_same_size(p, q, "total_variation");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

double kl_divergence(const Categorical& p, const Categorical& q) {
  require_same_size(p, q, "kl_divergence");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    sum += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(sum, 0.0);
}

double acceptance_rate(const Categorical& p, const Categorical& q) {
  require_same_size(p, q, "acceptance_rate");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::min(p[i], q[i]);
  return sum;
}

Categorical residual(const Categorical& p, const Categorical& q) {
  require_same_size(p, q, "residual");
  std::vector<double> weights(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    weights[i] = std::max(0.0, p[i] - q[i]);
    total += weights[i];
  }
  if (total <= 0.0) {
    throw DegenerateInput("residual: p and q coincide, residual is all zero");
  }
  for (double& w : weights) w /= total;
  return Categorical(std::move(weights));
}

double entropy(const Categorical& p) {
  double h = 0.0;
  for (double v : p.probs()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace odsim
