#include "dmsn/numerics/adam.hpp"

#include <cmath>

#include "dmsn/error.hpp"

namespace dmsn {

void adam_step(Tensor& params, const Tensor& grads, AdamState& state, const AdamHyper& hyper) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment)) {
    throw ShapeError("adam_step: parameter " + params.shape_string() + ", gradient " +
                     grads.shape_string() + " and moment shapes must agree");
  }
  if (!grads.all_finite()) throw NumericalError("adam_step: non-finite gradient, update rejected");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  double* p = params.data();
  const double* g = grads.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    p[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

}  // namespace dmsn
