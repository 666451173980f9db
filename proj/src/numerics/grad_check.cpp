#include "dmsn/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "dmsn/error.hpp"

namespace dmsn {

double grad_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult grad_check(const std::function<double(const Tensor&)>& loss, const Tensor& params,
                           const Tensor& analytic, double step) {
  if (!params.same_shape(analytic)) {
    throw ShapeError("grad_check: gradient shape " + analytic.shape_string() +
                     " differs from parameter shape " + params.shape_string());
  }
  GradCheckResult result;
  Tensor probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + step;
    const double up = loss(probe);
    probe[i] = original - step;
    const double down = loss(probe);
    probe[i] = original;
    const double numeric = (up - down) / (2.0 * step);
    const double err = grad_relative_error(analytic[i], numeric);
    if (i == 0 || err > result.max_rel_error) {
      result = {err, i, analytic[i], numeric};
    }
  }
  return result;
}

}  // namespace dmsn
