#pragma once

#include <functional>

#include "odsim/draft_model.h"

namespace odsim::validation {

// Central differences of a scalar function of the parameter matrix, one
// entry at a time.
Matrix central_difference(const std::function<double(const Matrix&)>& f,
                          const Matrix& at, double step);

// max over entries of |a - b| / max(|a|, |b|, floor).
double max_relative_error(const Matrix& analytic, const Matrix& numeric,
                          double floor);

}  // namespace odsim::validation
