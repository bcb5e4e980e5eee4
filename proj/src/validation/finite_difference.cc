#include "odsim/validation/finite_difference.h"

#include <algorithm>
#include <cmath>

namespace odsim::validation {

Matrix central_difference(const std::function<double(const Matrix&)>& f,
                          const Matrix& at, double step) {
  Matrix out(at.rows(), at.cols());
  Matrix probe = at;
  for (Eigen::Index r = 0; r < at.rows(); ++r) {
    for (Eigen::Index c = 0; c < at.cols(); ++c) {
      const double x = at(r, c);
      probe(r, c) = x + step;
      const double up = f(probe);
      probe(r, c) = x - step;
      const double down = f(probe);
      probe(r, c) = x;
      out(r, c) = (up - down) / (2.0 * step);
    }
  }
  return out;
}

double max_relative_error(const Matrix& analytic, const Matrix& numeric,
                          double floor) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < analytic.rows(); ++r) {
    for (Eigen::Index c = 0; c < analytic.cols(); ++c) {
      const double a = analytic(r, c);
      const double b = numeric(r, c);
      const double scale = std::max({std::abs(a), std::abs(b), floor});
      worst = std::max(worst, std::abs(a - b) / scale);
    }
  }
  return worst;
}

}  // namespace odsim::validation
