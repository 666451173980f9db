#pragma once

#include <cstdint>

#include "dmsn/numerics/tensor.hpp"

namespace dmsn {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment estimates for one parameter tensor.
struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const Tensor& param)
      : first_moment(Tensor::zeros_like(param)), second_moment(Tensor::zeros_like(param)) {}
};

// Bias-corrected Adam update. A gradient containing NaN/Inf throws
// NumericalError before anything is modified.
void adam_step(Tensor& params, const Tensor& grads, AdamState& state, const AdamHyper& hyper);

}  // namespace dmsn
