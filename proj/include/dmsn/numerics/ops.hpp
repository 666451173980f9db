#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "dmsn/numerics/tensor.hpp"

namespace dmsn {

enum class Activation { sigmoid, tanh, relu };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation kind);

double sigmoid(double x);

// [m x k] * [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor activate(const Tensor& x, Activation kind);
double activate(double x, Activation kind);
// Derivative expressed through the activation output y = f(x).
double activation_grad_from_output(double y, Activation kind);

// Exp-normalizes logits over positions where mask is nonzero; masked
// positions receive exactly 0. Throws if every position is masked.
Tensor softmax_masked(const Tensor& logits, std::span<const std::uint8_t> mask);

// Same-padded 1-D convolution over the columns of input [d x L] with
// kernels [m x d x k] (k odd) and bias [m]. Returns [m x L].
Tensor conv1d_same(const Tensor& input, const Tensor& kernels, const Tensor& bias);

// Accumulates gradients of conv1d_same given d_out [m x L]. d_input may be
// null when the input gradient is not needed.
void conv1d_same_backward(const Tensor& input, const Tensor& kernels, const Tensor& d_out,
                          Tensor* d_input, Tensor& d_kernels, Tensor& d_bias);

}  // namespace dmsn
