#pragma once

#include <cstddef>
#include <functional>

#include "dmsn/numerics/tensor.hpp"

namespace dmsn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Relative error used throughout: |a - n| / max(1e-8, |a| + |n|).
double grad_relative_error(double analytic, double numeric);

// Compares `analytic` against central differences (f(x+h) - f(x-h)) / 2h of
// `loss` around `params`, one coordinate at a time.
GradCheckResult grad_check(const std::function<double(const Tensor&)>& loss, const Tensor& params,
                           const Tensor& analytic, double step = 1e-6);

}  // namespace dmsn
