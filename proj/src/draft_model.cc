#include "odsim/draft_model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "odsim/errors.h"

namespace odsim {

namespace {

// Relative slack on the ball constraint so that a radially projected matrix
// (norm == D up to rounding) is accepted.
constexpr double kBallSlack = 1e-9;
constexpr double kProjectSlack = 1e-12;

void require_dims(const DraftParams& params, const FeatureVector& phi,
                  const char* op) {
  if (params.dim() != phi.dim()) {
    throw DimensionMismatch(std::string(op) + ": feature dimension " +
                            std::to_string(phi.dim()) + " != parameter width " +
                            std::to_string(params.dim()));
  }
}

void require_target(const DraftParams& params, const Categorical& target,
                    const char* op) {
  if (static_cast<int>(target.size()) != params.vocab_size()) {
    throw DimensionMismatch(std::string(op) + ": target vocabulary " +
                            std::to_string(target.size()) +
                            " != parameter rows " +
                            std::to_string(params.vocab_size()));
  }
}

Vector softmax(const Vector& logits) {
  Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

// log pi(y | features) under `params`, plus the gradient contribution
// sum_i (e_{y_i} - q_i) phi_i^T accumulated into `grad` with weight `scale`.
double sequence_log_prob(const DraftParams& params,
                         std::span<const FeatureVector> features,
                         const std::vector<int>& tokens, Matrix* grad,
                         double scale) {
  double total = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Vector logits = params.matrix() * features[i].values();
    const Vector logq = log_softmax(logits);
    total += logq[tokens[i]];
    if (grad != nullptr && scale != 0.0) {
      Vector coeff = -logq.array().exp().matrix();
      coeff[tokens[i]] += 1.0;
      grad->noalias() += scale * coeff * features[i].values().transpose();
    }
  }
  return total;
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

FeatureVector::FeatureVector(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) {
    throw DimensionMismatch("FeatureVector: dimension must be positive");
  }
  if (!(values_.norm() <= 1.0 + 1e-12)) {
    throw std::invalid_argument("FeatureVector: norm exceeds 1");
  }
}

DraftParams::DraftParams(Matrix matrix, double radius)
    : matrix_(std::move(matrix)), radius_(radius) {
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) {
    throw std::invalid_argument("DraftParams: radius must be positive");
  }
  if (matrix_.rows() < 2 || matrix_.cols() < 1) {
    throw DimensionMismatch("DraftParams: need at least 2 rows and 1 column");
  }
  const double norm = matrix_.norm();
  if (!std::isfinite(norm) || norm > radius_ * (1.0 + kBallSlack)) {
    throw std::invalid_argument("DraftParams: Frobenius norm " +
                                std::to_string(norm) + " exceeds radius " +
                                std::to_string(radius_));
  }
}

DraftParams DraftParams::zeros(int vocab_size, int dim, double radius) {
  return DraftParams(Matrix::Zero(vocab_size, dim), radius);
}

nlohmann::json DraftParams::to_json() const {
  std::vector<double> flat;
  flat.reserve(matrix_.size());
  for (Eigen::Index r = 0; r < matrix_.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix_.cols(); ++c) flat.push_back(matrix_(r, c));
  }
  return {{"V_sz", matrix_.rows()},
          {"d", matrix_.cols()},
          {"D", radius_},
          {"matrix", flat}};
}

DraftParams DraftParams::from_json(const nlohmann::json& j) {
  const int rows = j.at("V_sz").get<int>();
  const int cols = j.at("d").get<int>();
  const auto flat = j.at("matrix").get<std::vector<double>>();
  if (rows < 0 || cols < 0 ||
      flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw DimensionMismatch("DraftParams::from_json: matrix has " +
                            std::to_string(flat.size()) + " entries");
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = flat[static_cast<std::size_t>(r) * cols + c];
  }
  return DraftParams(std::move(m), j.at("D").get<double>());
}

Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

Categorical predict(const DraftParams& params, const FeatureVector& phi) {
  require_dims(params, phi, "predict");
  const Vector q = softmax(params.matrix() * phi.values());
  return Categorical(std::vector<double>(q.data(), q.data() + q.size()));
}

double ce_loss(const DraftParams& params, const FeatureVector& phi,
               const Categorical& target) {
  require_dims(params, phi, "ce_loss");
  require_target(params, target, "ce_loss");
  const Vector logq = log_softmax(params.matrix() * phi.values());
  double loss = 0.0;
  for (int x = 0; x < params.vocab_size(); ++x) {
    if (target[x] > 0.0) loss -= target[x] * logq[x];
  }
  return loss;
}

Matrix ce_grad(const DraftParams& params, const FeatureVector& phi,
               const Categorical& target) {
  require_dims(params, phi, "ce_grad");
  require_target(params, target, "ce_grad");
  Vector diff = softmax(params.matrix() * phi.values());
  for (int x = 0; x < params.vocab_size(); ++x) diff[x] -= target[x];
  return diff * phi.values().transpose();
}

DraftParams project(const Matrix& matrix, double radius) {
  const double norm = matrix.norm();
  // The slack makes projection idempotent: a rescaled matrix can land an ulp
  // above the radius.
  if (norm <= radius * (1.0 + kProjectSlack)) return DraftParams(matrix, radius);
  return DraftParams(matrix * (radius / norm), radius);
}

DraftParams project(const DraftParams& params) {
  return project(params.matrix(), params.radius());
}

DpoLossGrad dpo_loss_grad(const DraftParams& params, const DraftParams& ref,
                          std::span<const PreferenceTuple> batch, double beta) {
  if (batch.empty()) {
    throw std::invalid_argument("dpo_loss_grad: empty preference batch");
  }
  if (params.vocab_size() != ref.vocab_size() || params.dim() != ref.dim()) {
    throw DimensionMismatch("dpo_loss_grad: params and ref shapes differ");
  }
  const int vocab = params.vocab_size();
  DpoLossGrad out{0.0, Matrix::Zero(vocab, params.dim())};
  for (const PreferenceTuple& tuple : batch) {
    if (tuple.chosen.empty() || tuple.rejected.empty()) {
      throw std::invalid_argument("dpo_loss_grad: empty response");
    }
    const std::size_t length = std::max(tuple.chosen.size(), tuple.rejected.size());
    if (tuple.features.size() < length) {
      throw DimensionMismatch("dpo_loss_grad: fewer features than tokens");
    }
    for (const auto& f : tuple.features) {
      if (f.dim() != params.dim()) {
        throw DimensionMismatch("dpo_loss_grad: feature dimension mismatch");
      }
    }
    for (const auto* seq : {&tuple.chosen, &tuple.rejected}) {
      for (int y : *seq) {
        if (y < 0 || y >= vocab) {
          throw std::out_of_range("dpo_loss_grad: token index out of range");
        }
      }
    }
    const std::span<const FeatureVector> feats(tuple.features);
    const double margin =
        (sequence_log_prob(params, feats, tuple.chosen, nullptr, 0.0) -
         sequence_log_prob(ref, feats, tuple.chosen, nullptr, 0.0)) -
        (sequence_log_prob(params, feats, tuple.rejected, nullptr, 0.0) -
         sequence_log_prob(ref, feats, tuple.rejected, nullptr, 0.0));
    // -log sigmoid(beta m) = softplus(-beta m); d/dm = -beta sigmoid(-beta m).
    out.loss += softplus(-beta * margin);
    const double dmargin = -beta * sigmoid(-beta * margin);
    sequence_log_prob(params, feats, tuple.chosen, &out.grad, dmargin);
    sequence_log_prob(params, feats, tuple.rejected, &out.grad, -dmargin);
  }
  return out;
}

}  // namespace odsim
