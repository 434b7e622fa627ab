#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qkan/daruan.hpp"
#include "qkan/rng.hpp"
#include "qkan/statevector.hpp"
#include "qkan/train.hpp"

using namespace qkan;
using std::numbers::pi;

namespace {

// Generic parameters: random angles over the full circle, random encoding
// weights and biases, random residual scalars.
DaruanParams random_params(Rng& rng, std::size_t r) {
  DaruanParams p = DaruanParams::zeros(r);
  for (auto& w : p.enc_w) w = rng.uniform(-2.0, 2.0);
  for (auto& b : p.enc_b) b = rng.uniform(-pi, pi);
  for (auto& t : p.angles) {
    for (auto& a : t) a = rng.uniform(-pi, pi);
  }
  p.w_base = rng.uniform(-2.0, 2.0);
  p.w_quant = rng.uniform(-2.0, 2.0);
  p.out_bias = rng.uniform(-1.0, 1.0);
  return p;
}

// r = 1, W1 = I, W2 = ry(pi/2): the readout is -cos(w x + b).
DaruanParams cosine_config(double w = 1.0, double b = 0.0) {
  DaruanParams p = DaruanParams::zeros(1);
  p.enc_w = {w};
  p.enc_b = {b};
  p.angles[1] = {0.0, pi / 2, 0.0};
  p.w_base = 0.0;
  return p;
}

// Same with a -pi/2 phase rotation ahead of ry: the readout is -sin(w x + b).
DaruanParams sine_config(double w = 1.0, double b = 0.0) {
  DaruanParams p = cosine_config(w, b);
  p.angles[1] = {-pi / 2, pi / 2, 0.0};
  return p;
}

}  // namespace

TEST_CASE("raw_expectation on the equator is zero") {
  const DaruanParams p = DaruanParams::zeros(4);
  for (double x : {-3.0, -0.5, 0.0, 0.7, 2.0, 10.0}) CHECK(std::abs(raw_expectation(p, x)) < 1e-15);
}

TEST_CASE("single-block configurations match the matrix oracle") {
  for (double x : {0.0, pi / 4, pi / 2}) {
    const DaruanParams c = cosine_config();
    CHECK(raw_expectation(c, x) == doctest::Approx(oracle::circuit_z(c, x)).epsilon(1e-12));
    CHECK(raw_expectation(c, x) == doctest::Approx(-std::cos(x)).epsilon(1e-12));
    const DaruanParams s = sine_config();
    CHECK(raw_expectation(s, x) == doctest::Approx(oracle::circuit_z(s, x)).epsilon(1e-12));
    CHECK(std::abs(raw_expectation(s, x) + std::sin(x)) < 1e-12);
  }
}

TEST_CASE("random circuits match the matrix oracle") {
  Rng rng(101);
  for (int k = 0; k < 500; ++k) {
    const DaruanParams p = random_params(rng, 1 + rng.below(6));
    const double x = rng.uniform(-3, 3);
    CHECK(std::abs(raw_expectation(p, x) - oracle::circuit_z(p, x)) < 1e-12);
    CHECK(std::abs(forward(p, x) - oracle::activation(p, x)) < 1e-12);
  }
  Rng rng2(5);
  const DaruanParams p = random_params(rng2, 3);
  CHECK(std::abs(forward(p, 0.37) - oracle::activation(p, 0.37)) < 1e-12);
}

TEST_CASE("silu") {
  CHECK(silu(0.0) == 0.0);
  CHECK(std::abs(silu(20.0) - 20.0) < 1e-7);
  CHECK(silu(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
  for (double x : {-4.0, -1.0, 0.0, 0.5, 3.0}) {
    const double h = 1e-6;
    CHECK(silu_derivative(x) == doctest::Approx((silu(x + h) - silu(x - h)) / (2 * h)).epsilon(1e-8));
  }
}

TEST_CASE("forward residual switches") {
  Rng rng(9);
  DaruanParams p = random_params(rng, 3);
  p.w_base = 0.0;
  p.w_quant = 1.0;
  p.out_bias = 0.0;
  for (double x : {-2.0, 0.1, 1.5}) {
    CHECK(forward(p, x) == raw_expectation(p, x));
    CHECK(std::abs(forward(p, x)) <= 1.0);
  }
  p.w_base = 1.0;
  p.w_quant = 0.0;
  for (double x : {-2.0, 0.1, 1.5}) CHECK(forward(p, x) == silu(x));
}

TEST_CASE("raw_expectation stays in [-1, 1]") {
  Rng rng(12);
  double worst = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const DaruanParams p = random_params(rng, 1 + rng.below(5));
    worst = std::max(worst, std::abs(raw_expectation(p, rng.uniform(-10, 10))));
  }
  CHECK(worst <= 1.0 + 1e-12);
}

TEST_CASE("backward with the quantum path disabled") {
  Rng rng(4);
  DaruanParams p = random_params(rng, 3);
  p.w_quant = 0.0;
  const double x = 0.8;
  const double up = 1.7;
  const DaruanGrad g = backward(p, x, up);
  for (double v : g.wrt.enc_w) CHECK(v == 0.0);
  for (double v : g.wrt.enc_b) CHECK(v == 0.0);
  for (const auto& t : g.wrt.angles) {
    for (double v : t) CHECK(v == 0.0);
  }
  CHECK(g.wrt.w_base == doctest::Approx(silu(x) * up));
  CHECK(g.wrt.out_bias == doctest::Approx(up));
  CHECK(g.d_input == doctest::Approx(up * p.w_base * silu_derivative(x)));
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(2024);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t r = 1 + rng.below(5);
    const DaruanParams p = random_params(rng, r);
    const double x = rng.uniform(-2, 2);
    const double up = rng.uniform(0.5, 2.0);
    const DaruanGrad g = backward(p, x, up);

    const auto fd = oracle::central_diff(
        [&](std::span<const double> v) {
          DaruanParams q = p;
          q.read_flat(v);
          return up * oracle::activation(q, x);
        },
        p.flat(), 1e-6);
    const auto got = g.wrt.flat();
    for (std::size_t k = 0; k < fd.size(); ++k) {
      if (!oracle::grad_close(got[k], fd[k])) ++failures;
    }
    const double h = 1e-6;
    const double fdx = up * (oracle::activation(p, x + h) - oracle::activation(p, x - h)) / (2 * h);
    if (!oracle::grad_close(g.d_input, fdx)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("backward matches the parameter-shift rule") {
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + rng.below(5);
    const DaruanParams p = random_params(rng, r);
    const double x = rng.uniform(-2, 2);
    const auto got = backward(p, x, 1.0).wrt.flat();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const ParamIndex idx = ParamIndex::from_flat(r, k);
      if (!idx.rotation_generated()) continue;
      worst = std::max(worst, std::abs(parameter_shift_grad(p, x, idx) - got[k]));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("parameter_shift_grad edge cases") {
  Rng rng(8);
  DaruanParams p = random_params(rng, 2);
  CHECK_THROWS_AS(parameter_shift_grad(p, 0.3, ParamIndex::w_base()), std::invalid_argument);
  CHECK_THROWS_AS(parameter_shift_grad(p, 0.3, ParamIndex::w_quant()), std::invalid_argument);
  CHECK_THROWS_AS(parameter_shift_grad(p, 0.3, ParamIndex::out_bias()), std::invalid_argument);
  CHECK_THROWS_AS(parameter_shift_grad(p, 0.3, ParamIndex::enc_w(2)), std::invalid_argument);

  p.w_quant = 0.0;
  CHECK(parameter_shift_grad(p, 0.3, ParamIndex::angle(1, 1)) == 0.0);

  // -sin(w x) has slope -w at the origin.
  const double w = 1.7;
  const DaruanParams s = sine_config(w);
  const double d_b = parameter_shift_grad(s, 0.0, ParamIndex::enc_b(0));
  CHECK(std::abs(d_b * w) == doctest::Approx(w).epsilon(1e-12));
  CHECK(std::abs(backward(s, 0.0, 1.0).d_input) == doctest::Approx(w).epsilon(1e-12));
  CHECK(parameter_shift_grad(s, 0.0, ParamIndex::enc_w(0)) == 0.0);
}

TEST_CASE("extend preserves the activation") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const DaruanParams p = random_params(rng, 1 + rng.below(4));
    const DaruanParams q = extend(p, p.reps() + 1 + rng.below(3));
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double x = rng.uniform(-5, 5);
      worst = std::max(worst, std::abs(forward(p, x) - forward(q, x)));
    }
    CHECK(worst < 1e-12);
    for (std::size_t l = p.reps(); l < q.reps(); ++l) {
      CHECK(q.enc_w[l] == 0.0);
      CHECK(q.enc_b[l] == 0.0);
    }
  }
}

TEST_CASE("extend composes") {
  Rng rng(32);
  const DaruanParams p = random_params(rng, 2);
  CHECK(extend(extend(p, 3), 5) == extend(p, 5));
  CHECK_THROWS_AS(extend(p, 2), std::invalid_argument);
  CHECK_THROWS_AS(extend(p, 1), std::invalid_argument);
}

TEST_CASE("extended blocks train away from identity") {
  Rng rng(33);
  const DaruanParams p = DaruanParams::random(2, rng);
  DaruanParams q = extend(p, 3);
  std::vector<double> flat = q.flat();
  std::vector<double> grad(flat.size(), 0.0);
  const int n = 50;
  for (int k = 0; k < n; ++k) {
    const double x = -1.0 + 2.0 * k / (n - 1);
    const double err = forward(q, x) - std::sin(3.0 * x);
    backward_accumulate(q, x, 2.0 * err / n, grad);
  }
  AdamState adam;
  adam_step(adam, flat, grad);
  DaruanParams stepped = q;
  stepped.read_flat(flat);
  bool moved = false;
  for (std::size_t l = 3; l < stepped.angles.size(); ++l) {
    for (double a : stepped.angles[l]) moved = moved || a != 0.0;
  }
  moved = moved || stepped.enc_w[2] != 0.0 || stepped.enc_b[2] != 0.0;
  CHECK(moved);
}

TEST_CASE("unit encoding weights give a 2 pi periodic readout") {
  Rng rng(40);
  for (int trial = 0; trial < 50; ++trial) {
    DaruanParams p = random_params(rng, 1 + rng.below(5));
    for (auto& w : p.enc_w) w = 1.0;
    p.w_base = 0.0;
    const double x = rng.uniform(-3, 3);
    CHECK(std::abs(forward(p, x) - forward(p, x + 2 * pi)) < 1e-12);
  }
}

TEST_CASE("parameter layout") {
  Rng rng(1);
  const DaruanParams p = DaruanParams::random(3, rng);
  CHECK(p.size() == 21);
  CHECK(p.enc_w == std::vector<double>{1.0, 2.0, 4.0});
  for (const auto& t : p.angles) {
    for (double a : t) CHECK(std::abs(a) <= 0.1);
  }
  for (std::size_t k = 0; k < p.size(); ++k) CHECK(ParamIndex::from_flat(3, k).flat(3) == k);
  DaruanParams q = DaruanParams::zeros(3);
  q.read_flat(p.flat());
  CHECK(q == p);
  CHECK_THROWS_AS(ParamIndex::from_flat(3, 21), std::out_of_range);
}

TEST_CASE("validate") {
  CHECK_THROWS_AS(DaruanParams::zeros(0).validate(), std::invalid_argument);
  DaruanParams p = DaruanParams::zeros(2);
  p.validate();
  p.enc_b.pop_back();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = DaruanParams::zeros(2);
  p.w_quant = std::nan("");
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
