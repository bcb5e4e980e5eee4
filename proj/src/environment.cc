#include "odsim/environment.h"

#include <cmath>
#include <stdexcept>

#include "odsim/errors.h"
#include "odsim/rng.h"

namespace odsim {

namespace {

// Stream ids under the environment seed.
constexpr std::uint64_t kFeatureStream = 1;
constexpr std::uint64_t kComparatorStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

Matrix gaussian_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.gaussian();
  }
  return m;
}

// Softmax ignores a per-column shift across the vocabulary, so noise is kept
// in the identifiable subspace.
Matrix centered(Matrix m) {
  m.rowwise() -= m.colwise().mean();
  return m;
}

FeatureVector draw_feature(int dim, Rng& rng) {
  Vector v(dim);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (int i = 0; i < dim; ++i) v[i] = rng.gaussian();
    norm = v.norm();
  }
  return FeatureVector(v / norm);
}

// Per-round best model in the ball for a non-realizable target.
DraftParams solve_comparator(const DraftParams& start, const FeatureVector& phi,
                             const Categorical& target) {
  // CE in the logits has Hessian norm <= 1/2 and ||phi|| = 1, so step 1 is safe.
  constexpr double kStep = 1.0;
  DraftParams w = start;
  for (int i = 0; i < kAgnosticComparatorIterations; ++i) {
    w = project(w.matrix() - kStep * ce_grad(w, phi, target), w.radius());
  }
  return w;
}

}  // namespace

std::string regime_name(Regime regime) {
  switch (regime) {
    case Regime::kStationary: return "stationary";
    case Regime::kDrift: return "drift";
    case Regime::kShift: return "shift";
  }
  return "unknown";
}

Regime parse_regime(const std::string& name) {
  if (name == "stationary") return Regime::kStationary;
  if (name == "drift") return Regime::kDrift;
  if (name == "shift") return Regime::kShift;
  throw std::invalid_argument("unknown regime '" + name + "'");
}

void EnvConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("EnvConfig: " + msg); };
  if (T < 1) fail("T must be at least 1");
  if (vocab_size < 2) fail("vocab_size must be at least 2");
  if (dim < 1) fail("dim must be at least 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) fail("radius must be positive");
  if (!(comparator_scale > 0.0) || comparator_scale > 1.0) {
    fail("comparator_scale must lie in (0, 1]");
  }
  if (!(drift_rate >= 0.0) || !std::isfinite(drift_rate)) fail("drift rate must be >= 0");
  if (shift_period < 1) fail("shift period must be at least 1");
  if (!(shift_magnitude > 0.0) || !std::isfinite(shift_magnitude)) {
    fail("shift magnitude must be positive");
  }
  if (!(agnostic_noise >= 0.0) || !std::isfinite(agnostic_noise)) {
    fail("agnostic noise must be >= 0");
  }
}

std::vector<EnvStep> generate_stream(const EnvConfig& cfg) {
  cfg.validate();
  Rng features(derive_seed(cfg.seed, kFeatureStream));
  Rng moves(derive_seed(cfg.seed, kComparatorStream));
  Rng noise(derive_seed(cfg.seed, kNoiseStream));

  const int rows = cfg.vocab_size;
  const int cols = cfg.dim;
  Matrix init = centered(gaussian_matrix(rows, cols, moves));
  init *= cfg.comparator_scale * cfg.radius / init.norm();
  DraftParams hidden(init, cfg.radius);

  const double drift_scale =
      cfg.drift_rate / std::sqrt(static_cast<double>((rows - 1) * cols));

  std::vector<EnvStep> stream;
  stream.reserve(static_cast<std::size_t>(cfg.T));
  for (long t = 0; t < cfg.T; ++t) {
    if (t > 0) {
      if (cfg.regime == Regime::kDrift) {
        const Matrix step = centered(gaussian_matrix(rows, cols, moves));
        hidden = project(hidden.matrix() + drift_scale * step, cfg.radius);
      } else if (cfg.regime == Regime::kShift && t % cfg.shift_period == 0) {
        const Matrix jump = centered(gaussian_matrix(rows, cols, moves));
        hidden = project(hidden.matrix() + cfg.shift_magnitude / jump.norm() * jump,
                         cfg.radius);
      }
    }
    FeatureVector phi = draw_feature(cols, features);
    if (!cfg.agnostic) {
      Categorical target = predict(hidden, phi);
      const double loss = entropy(target);
      stream.push_back({std::move(phi), std::move(target), hidden, loss});
      continue;
    }
    Vector logits = hidden.matrix() * phi.values();
    for (int x = 0; x < rows; ++x) logits[x] += cfg.agnostic_noise * noise.gaussian();
    const Vector p = log_softmax(logits).array().exp();
    Categorical target(std::vector<double>(p.data(), p.data() + p.size()));
    DraftParams comparator = solve_comparator(hidden, phi, target);
    const double loss = ce_loss(comparator, phi, target);
    stream.push_back({std::move(phi), std::move(target), std::move(comparator), loss});
  }
  return stream;
}

double path_length(std::span<const EnvStep> stream) {
  if (stream.size() < 2) {
    throw std::invalid_argument("path_length: stream needs at least two steps");
  }
  double total = 0.0;
  for (std::size_t t = 1; t < stream.size(); ++t) {
    total += (stream[t].comparator.matrix() - stream[t - 1].comparator.matrix()).norm();
  }
  return total;
}

}  // namespace odsim
