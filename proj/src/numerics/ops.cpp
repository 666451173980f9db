#include "dmsn/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dmsn/error.hpp"

namespace dmsn {

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "?";
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul expects matrices, got " + a.shape_string() + " and " + b.shape_string());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul inner extents differ: " + a.shape_string() + " x " + b.shape_string());
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* o = out.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      const double* br = b.row(p);
      for (std::size_t j = 0; j < n; ++j) o[j] += aip * br[j];
    }
  }
  return out;
}

double activate(double x, Activation kind) {
  switch (kind) {
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

Tensor activate(const Tensor& x, Activation kind) {
  Tensor out = x;
  for (auto& v : out.values()) v = activate(v, kind);
  return out;
}

double activation_grad_from_output(double y, Activation kind) {
  switch (kind) {
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::tanh: return 1.0 - y * y;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

Tensor softmax_masked(const Tensor& logits, std::span<const std::uint8_t> mask) {
  const std::size_t n = logits.size();
  if (mask.size() != n) throw ShapeError("softmax mask length differs from logits");
  double peak = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      peak = std::max(peak, logits[i]);
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("softmax_masked: every position is masked");
  Tensor out({n});
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      out[i] = std::exp(logits[i] - peak);
      total += out[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= total;
  return out;
}

namespace {

void check_conv_shapes(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  if (input.rank() != 2 || kernels.rank() != 3 || bias.rank() != 1) {
    throw ShapeError("conv1d_same expects input [d x L], kernels [m x d x k], bias [m]");
  }
  if (kernels.dim(1) != input.rows()) {
    throw ShapeError("conv1d_same kernel depth " + std::to_string(kernels.dim(1)) +
                     " differs from input depth " + std::to_string(input.rows()));
  }
  if (bias.size() != kernels.dim(0)) throw ShapeError("conv1d_same bias length differs from kernel count");
  if (kernels.dim(2) % 2 == 0) {
    throw ShapeError("conv1d_same requires an odd kernel width, got " + std::to_string(kernels.dim(2)));
  }
}

}  // namespace

Tensor conv1d_same(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  check_conv_shapes(input, kernels, bias);
  const std::size_t d = input.rows(), len = input.cols();
  const std::size_t m = kernels.dim(0), k = kernels.dim(2);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  const auto L = static_cast<std::ptrdiff_t>(len);
  Tensor out({m, len});
  for (std::size_t o = 0; o < m; ++o) {
    double* dst = out.row(o);
    std::fill(dst, dst + len, bias[o]);
    for (std::size_t c = 0; c < d; ++c) {
      const double* src = input.row(c);
      const double* w = kernels.data() + (o * d + c) * k;
      for (std::size_t j = 0; j < k; ++j) {
        const double wj = w[j];
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - half;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(L, L - shift);
        for (std::ptrdiff_t i = lo; i < hi; ++i) dst[i] += wj * src[i + shift];
      }
    }
  }
  return out;
}

void conv1d_same_backward(const Tensor& input, const Tensor& kernels, const Tensor& d_out,
                          Tensor* d_input, Tensor& d_kernels, Tensor& d_bias) {
  check_conv_shapes(input, kernels, d_bias);
  const std::size_t d = input.rows(), len = input.cols();
  const std::size_t m = kernels.dim(0), k = kernels.dim(2);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  const auto L = static_cast<std::ptrdiff_t>(len);
  for (std::size_t o = 0; o < m; ++o) {
    const double* g = d_out.row(o);
    double gsum = 0.0;
    for (std::size_t i = 0; i < len; ++i) gsum += g[i];
    d_bias[o] += gsum;
    for (std::size_t c = 0; c < d; ++c) {
      const double* src = input.row(c);
      double* dsrc = d_input ? d_input->row(c) : nullptr;
      const double* w = kernels.data() + (o * d + c) * k;
      double* dw = d_kernels.data() + (o * d + c) * k;
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - half;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(L, L - shift);
        double acc = 0.0;
        for (std::ptrdiff_t i = lo; i < hi; ++i) acc += g[i] * src[i + shift];
        dw[j] += acc;
        if (dsrc) {
          const double wj = w[j];
          for (std::ptrdiff_t i = lo; i < hi; ++i) dsrc[i + shift] += wj * g[i];
        }
      }
    }
  }
}

}  // namespace dmsn
