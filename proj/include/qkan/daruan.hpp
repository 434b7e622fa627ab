#pragma once

// One trainable activation edge:
//
//   phi(x) = w_base * silu(x) + w_quant * <Z>(x) + out_bias
//
// where <Z>(x) is read out from
//
//   W_{r+1} rz(w_r x + b_r) W_r ... rz(w_1 x + b_1) W_1 H|0>
//
// and each W_l = rz(gamma) ry(beta) rz(alpha). All-zero angles make every
// W_l the identity.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "qkan/rng.hpp"

namespace qkan {

struct DaruanInit {
  double angle_range = 0.1;   // angles ~ U(-angle_range, angle_range)
  bool geometric_weights = true;  // enc_w_l = 2^(l-1), else 1
  double w_base = 1.0;
  double w_quant = 1.0;
  double out_bias = 0.0;
};

struct DaruanParams {
  std::vector<double> enc_w;
  std::vector<double> enc_b;
  std::vector<std::array<double, 3>> angles;  // r + 1 triples (alpha, beta, gamma)
  double w_base = 1.0;
  double w_quant = 1.0;
  double out_bias = 0.0;

  /// r enc blocks, all-zero angles and encoding biases, unit encoding weights.
  static DaruanParams zeros(std::size_t r);
  static DaruanParams random(std::size_t r, Rng& rng, const DaruanInit& init = {});

  std::size_t reps() const { return enc_w.size(); }
  /// Trainable scalar count: 5r + 6.
  std::size_t size() const { return 5 * reps() + 6; }
  static std::size_t size_for(std::size_t r) { return 5 * r + 6; }

  /// Throws std::invalid_argument when r == 0, shapes disagree or a field is non-finite.
  void validate() const;

  // Flat order: enc_w[r], enc_b[r], angles[(r+1)*3] row-major, w_base, w_quant, out_bias.
  void write_flat(std::span<double> out) const;
  void read_flat(std::span<const double> in);
  std::vector<double> flat() const;

  bool operator==(const DaruanParams&) const = default;
};

struct DaruanGrad {
  DaruanParams wrt;  // same shape as the source parameters
  double d_input = 0.0;
};

/// Addresses one scalar of DaruanParams.
struct ParamIndex {
  enum class Kind { kEncW, kEncB, kAngle, kWBase, kWQuant, kOutBias };
  Kind kind = Kind::kAngle;
  std::size_t block = 0;      // encoding block or unitary index
  std::size_t component = 0;  // 0..2 for angles

  static ParamIndex enc_w(std::size_t l) { return {Kind::kEncW, l, 0}; }
  static ParamIndex enc_b(std::size_t l) { return {Kind::kEncB, l, 0}; }
  static ParamIndex angle(std::size_t l, std::size_t c) { return {Kind::kAngle, l, c}; }
  static ParamIndex w_base() { return {Kind::kWBase, 0, 0}; }
  static ParamIndex w_quant() { return {Kind::kWQuant, 0, 0}; }
  static ParamIndex out_bias() { return {Kind::kOutBias, 0, 0}; }

  std::size_t flat(std::size_t r) const;
  static ParamIndex from_flat(std::size_t r, std::size_t index);
  bool rotation_generated() const {
    return kind == Kind::kEncW || kind == Kind::kEncB || kind == Kind::kAngle;
  }
};

double silu(double x);
double silu_derivative(double x);

/// Pauli-Z expectation of the re-uploading circuit, in [-1, 1].
double raw_expectation(const DaruanParams& p, double x);
double forward(const DaruanParams& p, double x);

/// Exact gradient of upstream * forward(p, x) by an adjoint sweep.
DaruanGrad backward(const DaruanParams& p, double x, double upstream);

/// Allocation-free variant: adds parameter gradients into grad (flat
/// layout, size p.size()) and returns the input derivative.
double backward_accumulate(const DaruanParams& p, double x, double upstream, std::span<double> grad);

/// Two-term shift rule on the addressed rotation argument, applied to forward().
/// For enc_w the encoding-angle derivative is multiplied by x.
/// Throws std::invalid_argument for w_base, w_quant and out_bias.
double parameter_shift_grad(const DaruanParams& p, double x, ParamIndex which);

/// Appends identity blocks (zero angles, zero enc_w and enc_b) up to new_r.
DaruanParams extend(const DaruanParams& p, std::size_t new_r);

}  // namespace qkan
