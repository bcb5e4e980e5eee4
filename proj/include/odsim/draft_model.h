#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "odsim/categorical.h"

namespace odsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Context features with Euclidean norm at most one, which makes the CE
// gradient bound explicit (G = sqrt(2)).
class FeatureVector {
 public:
  explicit FeatureVector(Vector values);

  const Vector& values() const { return values_; }
  int dim() const { return static_cast<int>(values_.size()); }

 private:
  Vector values_;
};

// Logit matrix (V_sz x d) of the linear-softmax draft model, constrained to
// the Frobenius ball of radius D.
class DraftParams {
 public:
  DraftParams(Matrix matrix, double radius);

  static DraftParams zeros(int vocab_size, int dim, double radius);

  const Matrix& matrix() const { return matrix_; }
  double radius() const { return radius_; }
  int vocab_size() const { return static_cast<int>(matrix_.rows()); }
  int dim() const { return static_cast<int>(matrix_.cols()); }

  // {"V_sz", "d", "D", "matrix": row-major array}
  nlohmann::json to_json() const;
  static DraftParams from_json(const nlohmann::json& j);

  friend bool operator==(const DraftParams& a, const DraftParams& b) {
    return a.radius_ == b.radius_ && a.matrix_.rows() == b.matrix_.rows() &&
           a.matrix_.cols() == b.matrix_.cols() && a.matrix_ == b.matrix_;
  }

 private:
  Matrix matrix_;
  double radius_;
};

struct PreferenceTuple {
  std::vector<FeatureVector> features;  // one per position
  std::vector<int> chosen;              // y_w
  std::vector<int> rejected;            // y_l
};

struct DpoLossGrad {
  double loss = 0.0;
  Matrix grad;
};

// softmax(matrix * phi).
Categorical predict(const DraftParams& params, const FeatureVector& phi);

// -sum_x target[x] ln q[x] = entropy(target) + KL(target || q).
double ce_loss(const DraftParams& params, const FeatureVector& phi,
               const Categorical& target);

// (q - target) phi^T.
Matrix ce_grad(const DraftParams& params, const FeatureVector& phi,
               const Categorical& target);

// Euclidean projection onto the Frobenius ball (radial rescaling).
DraftParams project(const Matrix& matrix, double radius);
DraftParams project(const DraftParams& params);

// Preference loss -sum log sigmoid(beta (L(y_w) - L(y_l))) with
// L(y) = log pi_params(y|x) - log pi_ref(y|x), and its exact gradient in
// `params` (ref is held fixed).
DpoLossGrad dpo_loss_grad(const DraftParams& params, const DraftParams& ref,
                          std::span<const PreferenceTuple> batch, double beta);

// Log-probabilities of softmax(logits), computed with max subtraction.
Vector log_softmax(const Vector& logits);

}  // namespace odsim
