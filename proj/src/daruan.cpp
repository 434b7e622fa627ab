#include "qkan/daruan.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qkan/statevector.hpp"

namespace qkan {

namespace {

// Gate k of the circuit, in application order. Unitary l occupies slots
// 4l, 4l+1, 4l+2 (rz alpha, ry beta, rz gamma); slot 4l+3 is the l-th
// encoding rz for l < r. Total 4r + 3 rotations.
struct Gate {
  bool is_y;
  double arg;
};

std::size_t gate_count(std::size_t r) { return 4 * r + 3; }

Gate gate_at(const DaruanParams& p, double x, std::size_t k) {
  const std::size_t l = k / 4;
  switch (k % 4) {
    case 0: return {false, p.angles[l][0]};
    case 1: return {true, p.angles[l][1]};
    case 2: return {false, p.angles[l][2]};
    default: return {false, p.enc_w[l] * x + p.enc_b[l]};
  }
}

std::size_t gate_slot_of(ParamIndex which) {
  switch (which.kind) {
    case ParamIndex::Kind::kAngle: return 4 * which.block + which.component;
    case ParamIndex::Kind::kEncW:
    case ParamIndex::Kind::kEncB: return 4 * which.block + 3;
    default: throw std::invalid_argument("parameter is not rotation-generated");
  }
}

PureState apply_gate(const PureState& s, Gate g) {
  return g.is_y ? apply_ry(s, g.arg) : apply_rz(s, g.arg);
}

PureState plus_state() {
  const double h = 1.0 / std::sqrt(2.0);
  return {Complex{h}, Complex{h}};
}

// Circuit readout with an extra shift on one gate's argument.
double shifted_expectation(const DaruanParams& p, double x, std::size_t slot, double shift) {
  PureState s = plus_state();
  const std::size_t n = gate_count(p.reps());
  for (std::size_t k = 0; k < n; ++k) {
    Gate g = gate_at(p, x, k);
    if (k == slot) g.arg += shift;
    s = apply_gate(s, g);
  }
  return expect_z(s);
}

// <a|G|b> for G = Y or Z.
Complex generator_element(const PureState& a, const PureState& b, bool is_y) {
  if (is_y) {
    return std::conj(a.amp0) * Complex{0.0, -1.0} * b.amp1 + std::conj(a.amp1) * Complex{0.0, 1.0} * b.amp0;
  }
  return std::conj(a.amp0) * b.amp0 - std::conj(a.amp1) * b.amp1;
}

}  // namespace

DaruanParams DaruanParams::zeros(std::size_t r) {
  DaruanParams p;
  p.enc_w.assign(r, 1.0);
  p.enc_b.assign(r, 0.0);
  p.angles.assign(r + 1, {0.0, 0.0, 0.0});
  return p;
}

DaruanParams DaruanParams::random(std::size_t r, Rng& rng, const DaruanInit& init) {
  if (r == 0) throw std::invalid_argument("DaruanParams: repetition count must be >= 1");
  DaruanParams p = zeros(r);
  for (std::size_t l = 0; l < r; ++l) {
    p.enc_w[l] = init.geometric_weights ? std::ldexp(1.0, static_cast<int>(l)) : 1.0;
  }
  for (auto& triple : p.angles) {
    for (double& a : triple) a = rng.uniform(-init.angle_range, init.angle_range);
  }
  p.w_base = init.w_base;
  p.w_quant = init.w_quant;
  p.out_bias = init.out_bias;
  return p;
}

void DaruanParams::validate() const {
  const std::size_t r = reps();
  if (r == 0) throw std::invalid_argument("DaruanParams: repetition count must be >= 1");
  if (enc_b.size() != r || angles.size() != r + 1) {
    throw std::invalid_argument("DaruanParams: field lengths disagree with r = " + std::to_string(r));
  }
  for (double v : flat()) {
    if (!std::isfinite(v)) throw std::invalid_argument("DaruanParams: non-finite parameter");
  }
}

void DaruanParams::write_flat(std::span<double> out) const {
  if (out.size() != size()) throw std::invalid_argument("DaruanParams::write_flat: size mismatch");
  std::size_t k = 0;
  for (double v : enc_w) out[k++] = v;
  for (double v : enc_b) out[k++] = v;
  for (const auto& t : angles) {
    for (double v : t) out[k++] = v;
  }
  out[k++] = w_base;
  out[k++] = w_quant;
  out[k] = out_bias;
}

void DaruanParams::read_flat(std::span<const double> in) {
  if (in.size() != size()) throw std::invalid_argument("DaruanParams::read_flat: size mismatch");
  std::size_t k = 0;
  for (double& v : enc_w) v = in[k++];
  for (double& v : enc_b) v = in[k++];
  for (auto& t : angles) {
    for (double& v : t) v = in[k++];
  }
  w_base = in[k++];
  w_quant = in[k++];
  out_bias = in[k];
}

std::vector<double> DaruanParams::flat() const {
  std::vector<double> out(size());
  write_flat(out);
  return out;
}

std::size_t ParamIndex::flat(std::size_t r) const {
  switch (kind) {
    case Kind::kEncW: return block;
    case Kind::kEncB: return r + block;
    case Kind::kAngle: return 2 * r + 3 * block + component;
    case Kind::kWBase: return 5 * r + 3;
    case Kind::kWQuant: return 5 * r + 4;
    case Kind::kOutBias: return 5 * r + 5;
  }
  return 0;
}

ParamIndex ParamIndex::from_flat(std::size_t r, std::size_t index) {
  if (index < r) return enc_w(index);
  if (index < 2 * r) return enc_b(index - r);
  if (index < 5 * r + 3) return angle((index - 2 * r) / 3, (index - 2 * r) % 3);
  if (index == 5 * r + 3) return w_base();
  if (index == 5 * r + 4) return w_quant();
  if (index == 5 * r + 5) return out_bias();
  throw std::out_of_range("ParamIndex::from_flat: index " + std::to_string(index) + " out of range");
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_derivative(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

double raw_expectation(const DaruanParams& p, double x) {
  PureState s = plus_state();
  const std::size_t n = gate_count(p.reps());
  for (std::size_t k = 0; k < n; ++k) s = apply_gate(s, gate_at(p, x, k));
  return expect_z(s);
}

double forward(const DaruanParams& p, double x) {
  return p.w_base * silu(x) + p.w_quant * raw_expectation(p, x) + p.out_bias;
}

double backward_accumulate(const DaruanParams& p, double x, double upstream, std::span<double> grad) {
  const std::size_t r = p.reps();
  if (grad.size() != p.size()) throw std::invalid_argument("backward: gradient buffer size mismatch");

  PureState phi = plus_state();
  const std::size_t n = gate_count(r);
  for (std::size_t k = 0; k < n; ++k) phi = apply_gate(phi, gate_at(p, x, k));
  const double raw = expect_z(phi);

  // lambda = Z psi, then both states are swept back through the circuit.
  // d<Z>/da_k = Im <lambda_k| G_k |phi_k>.
  PureState lambda{phi.amp0, -phi.amp1};
  const double scale = upstream * p.w_quant;
  double d_input = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const Gate g = gate_at(p, x, k);
    const double d_arg = scale * generator_element(lambda, phi, g.is_y).imag();
    const std::size_t l = k / 4;
    if (k % 4 == 3) {
      grad[l] += x * d_arg;
      grad[r + l] += d_arg;
      d_input += p.enc_w[l] * d_arg;
    } else {
      grad[2 * r + 3 * l + k % 4] += d_arg;
    }
    const Gate inv{g.is_y, -g.arg};
    phi = apply_gate(phi, inv);
    lambda = apply_gate(lambda, inv);
  }

  grad[5 * r + 3] += upstream * silu(x);
  grad[5 * r + 4] += upstream * raw;
  grad[5 * r + 5] += upstream;
  d_input += upstream * p.w_base * silu_derivative(x);
  return d_input;
}

DaruanGrad backward(const DaruanParams& p, double x, double upstream) {
  std::vector<double> flat_grad(p.size(), 0.0);
  DaruanGrad g;
  g.d_input = backward_accumulate(p, x, upstream, flat_grad);
  g.wrt = DaruanParams::zeros(p.reps());
  g.wrt.read_flat(flat_grad);
  return g;
}

double parameter_shift_grad(const DaruanParams& p, double x, ParamIndex which) {
  if (!which.rotation_generated()) {
    throw std::invalid_argument("parameter_shift_grad: w_base, w_quant and out_bias are not rotation-generated");
  }
  if (which.block >= (which.kind == ParamIndex::Kind::kAngle ? p.reps() + 1 : p.reps()) ||
      which.component > 2) {
    throw std::invalid_argument("parameter_shift_grad: index out of range");
  }
  const std::size_t slot = gate_slot_of(which);
  constexpr double kShift = std::numbers::pi / 2.0;
  const double plus = shifted_expectation(p, x, slot, kShift);
  const double minus = shifted_expectation(p, x, slot, -kShift);
  // The silu and bias terms cancel in the difference.
  const double d_arg = p.w_quant * (plus - minus) / 2.0;
  return which.kind == ParamIndex::Kind::kEncW ? x * d_arg : d_arg;
}

DaruanParams extend(const DaruanParams& p, std::size_t new_r) {
  if (new_r <= p.reps()) {
    throw std::invalid_argument("extend: new_r (" + std::to_string(new_r) + ") must exceed r (" +
                                std::to_string(p.reps()) + ")");
  }
  DaruanParams out = p;
  out.enc_w.resize(new_r, 0.0);
  out.enc_b.resize(new_r, 0.0);
  out.angles.resize(new_r + 1, {0.0, 0.0, 0.0});
  return out;
}

}  // namespace qkan
