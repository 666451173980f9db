#include <doctest.h>

#include <cmath>

#include "dmsn/error.hpp"
#include "dmsn/numerics/adam.hpp"
#include "dmsn/numerics/grad_check.hpp"
#include "dmsn/numerics/ops.hpp"
#include "dmsn/random.hpp"
#include "oracles.hpp"

using namespace dmsn;

namespace {

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t({r, c});
  for (double& v : t.values()) v = rng.uniform(-1, 1);
  return t;
}

}  // namespace

TEST_CASE("tensor shape and data agree") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK_THROWS(Tensor({2, 0}));
  CHECK_THROWS(Tensor({2, 2}, std::vector<double>{1, 2, 3}));
}

TEST_CASE("matmul small cases") {
  const Tensor id = Tensor::matrix({{1, 0}, {0, 1}});
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(matmul(id, a) == a);
  const Tensor p = Tensor::matrix({{1, 0}, {0, 0}});
  CHECK(matmul(p, Tensor::matrix({{5}, {7}})) == Tensor::matrix({{5}, {0}}));
  CHECK_THROWS_AS(matmul(a, Tensor::matrix({{1, 2, 3}})), ShapeError);
}

TEST_CASE("matmul matches triple loop and is associative") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor a = random_matrix(rng, 3, 4), b = random_matrix(rng, 4, 2), c = random_matrix(rng, 2, 5);
    const Tensor ab = matmul(a, b);
    const Tensor ref = oracle::naive_matmul(a, b);
    for (std::size_t i = 0; i < ab.size(); ++i) CHECK(std::abs(ab[i] - ref[i]) < 1e-12);
    const Tensor left = matmul(ab, c), right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i)
      CHECK(std::abs(left[i] - right[i]) <= 1e-9 * std::max(1.0, std::abs(left[i])));
  }
}

TEST_CASE("activations") {
  CHECK(activate(0.0, Activation::sigmoid) == 0.5);
  CHECK(activate(0.0, Activation::tanh) == 0.0);
  CHECK(activate(-3.2, Activation::relu) == 0.0);
  CHECK(activate(1.7, Activation::relu) == 1.7);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
  CHECK(parse_activation("relu") == Activation::relu);
  CHECK_THROWS(parse_activation("gelu"));
  // Derivatives from outputs against central differences away from the kink.
  for (auto kind : {Activation::sigmoid, Activation::tanh, Activation::relu}) {
    for (double x : {-1.3, -0.2, 0.4, 2.1}) {
      const double h = 1e-6;
      const double num = (activate(x + h, kind) - activate(x - h, kind)) / (2 * h);
      CHECK(activation_grad_from_output(activate(x, kind), kind) == doctest::Approx(num).epsilon(1e-6));
    }
  }
}

TEST_CASE("softmax_masked examples") {
  const std::uint8_t one[] = {1};
  CHECK(softmax_masked(Tensor::vector({42.0}), one)[0] == 1.0);
  const std::uint8_t two[] = {1, 1};
  const Tensor eq = softmax_masked(Tensor::vector({3.3, 3.3}), two);
  CHECK(eq[0] == 0.5);
  CHECK(eq[1] == 0.5);
  const Tensor w = softmax_masked(Tensor::vector({0.0, std::log(3.0)}), two);
  CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-12));
  const std::uint8_t none[] = {0, 0};
  CHECK_THROWS(softmax_masked(Tensor::vector({1.0, 2.0}), none));
}

TEST_CASE("softmax_masked properties on random inputs") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    Tensor logits({n});
    std::vector<std::uint8_t> mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] = rng.uniform(-50, 50);
      mask[i] = rng.bernoulli(0.6);
    }
    mask[rng.below(n)] = 1;
    const Tensor w = softmax_masked(logits, mask);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(w[i] >= 0.0);
      if (!mask[i]) CHECK(w[i] == 0.0);
      sum += w[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("conv1d_same examples") {
  const Tensor input = Tensor::matrix({{1, 2, 3}});
  const Tensor k1({1, 1, 1}, 1.0);
  CHECK(conv1d_same(input, k1, Tensor({1})) == input);
  const Tensor k3({1, 1, 3}, 1.0);
  CHECK(conv1d_same(Tensor::matrix({{1, 1, 1}}), k3, Tensor({1})) == Tensor::matrix({{2, 3, 2}}));
  CHECK_THROWS(conv1d_same(input, Tensor({1, 1, 2}, 1.0), Tensor({1})));
}

TEST_CASE("conv1d_same keeps length and is linear") {
  Rng rng(3);
  for (int k : {1, 3, 5, 7}) {
    for (std::size_t len : {1u, 2u, 6u, 11u}) {
      const Tensor x = random_matrix(rng, 4, len), y = random_matrix(rng, 4, len);
      Tensor kernels({3, 4, static_cast<std::size_t>(k)});
      for (double& v : kernels.values()) v = rng.uniform(-1, 1);
      const Tensor zero_bias({3});
      const Tensor cx = conv1d_same(x, kernels, zero_bias);
      CHECK(cx.cols() == len);
      Tensor mix = x;
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.5 * x[i] - 0.75 * y[i];
      const Tensor cm = conv1d_same(mix, kernels, zero_bias), cy = conv1d_same(y, kernels, zero_bias);
      for (std::size_t i = 0; i < cm.size(); ++i) CHECK(std::abs(cm[i] - (2.5 * cx[i] - 0.75 * cy[i])) < 1e-10);
    }
  }
}

TEST_CASE("conv1d_same backward matches finite differences") {
  Rng rng(8);
  const Tensor x = random_matrix(rng, 3, 6);
  Tensor kernels({2, 3, 5});
  for (double& v : kernels.values()) v = rng.uniform(-1, 1);
  Tensor bias = Tensor::vector({0.1, -0.2});
  const Tensor weights = random_matrix(rng, 2, 6);
  auto objective = [&](const Tensor& in, const Tensor& k, const Tensor& b) {
    const Tensor out = conv1d_same(in, k, b);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += weights[i] * out[i];
    return s;
  };
  Tensor dx = Tensor::zeros_like(x), dk = Tensor::zeros_like(kernels), db = Tensor::zeros_like(bias);
  conv1d_same_backward(x, kernels, weights, &dx, dk, db);
  CHECK(grad_check([&](const Tensor& p) { return objective(p, kernels, bias); }, x, dx).max_rel_error < 1e-7);
  CHECK(grad_check([&](const Tensor& p) { return objective(x, p, bias); }, kernels, dk).max_rel_error < 1e-7);
  CHECK(grad_check([&](const Tensor& p) { return objective(x, kernels, p); }, bias, db).max_rel_error < 1e-7);
}

TEST_CASE("adam examples") {
  Tensor theta = Tensor::vector({0.0});
  AdamState state(theta);
  adam_step(theta, Tensor::vector({1.0}), state, AdamHyper{0.1});
  CHECK(theta[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(theta[0] == doctest::Approx(-0.0999999990).epsilon(1e-9));
  CHECK(state.step == 1);

  Rng rng(2);
  Tensor p = random_matrix(rng, 3, 3);
  const Tensor before = p;
  AdamState s(p);
  for (int i = 0; i < 5; ++i) adam_step(p, Tensor::zeros_like(p), s, AdamHyper{});
  CHECK(p == before);
  CHECK(s.step == 5);
}

TEST_CASE("adam is deterministic and rejects non-finite gradients") {
  Rng rng(4);
  const Tensor start = random_matrix(rng, 4, 2);
  std::vector<Tensor> grads;
  for (int i = 0; i < 10; ++i) grads.push_back(random_matrix(rng, 4, 2));
  auto run = [&] {
    Tensor p = start;
    AdamState s(p);
    for (const auto& g : grads) adam_step(p, g, s, AdamHyper{});
    return p;
  };
  CHECK(run() == run());

  Tensor p = start;
  AdamState s(p);
  Tensor bad = grads[0];
  bad[3] = std::nan("");
  CHECK_THROWS_AS(adam_step(p, bad, s, AdamHyper{}), NumericalError);
  CHECK(p == start);
  CHECK(s.step == 0);
}

TEST_CASE("grad_check on a quadratic") {
  Rng rng(9);
  const Tensor theta = random_matrix(rng, 2, 5);
  auto half_norm = [](const Tensor& t) {
    double s = 0.0;
    for (double v : t.values()) s += 0.5 * v * v;
    return s;
  };
  CHECK(grad_check(half_norm, theta, theta).max_rel_error < 1e-8);
  Tensor wrong = theta;
  wrong[4] += 0.5;
  const auto res = grad_check(half_norm, theta, wrong);
  CHECK(res.worst_index == 4);
  CHECK(res.max_rel_error > 1e-2);
  CHECK(grad_relative_error(0.0, 0.0) == 0.0);
  CHECK(grad_relative_error(1e-9, 0.0) == doctest::Approx(0.1));
}

TEST_CASE("rng derived seeds are distinct and reproducible") {
  CHECK(derive_seed(42, 0) == derive_seed(42, 0));
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 0) != derive_seed(43, 0));
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.below(1000) == b.below(1000));
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const int v = c.range(3, 5);
    CHECK(v >= 3);
    CHECK(v <= 5);
  }
}
