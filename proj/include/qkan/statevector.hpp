#pragma once

// Single-qubit simulation substrate: gates, states and Pauli-Z readout.
//
// Rotation convention: R_G(a) = exp(-i a G / 2) for G in {Y, Z}, so every
// generator G/2 has eigenvalues +-1/2 and the two-term parameter-shift rule
// with shift pi/2 is exact.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qkan {

using Complex = std::complex<double>;

/// 2x2 complex matrix, row-major.
struct UnitaryMat {
  std::array<Complex, 4> m{Complex{1.0}, Complex{}, Complex{}, Complex{1.0}};

  Complex operator()(int row, int col) const { return m[static_cast<std::size_t>(2 * row + col)]; }
  Complex& operator()(int row, int col) { return m[static_cast<std::size_t>(2 * row + col)]; }

  static UnitaryMat identity() { return {}; }

  UnitaryMat adjoint() const;
  Complex det() const;
};

UnitaryMat operator*(const UnitaryMat& a, const UnitaryMat& b);

struct PureState {
  Complex amp0{1.0};
  Complex amp1{};

  static PureState zero() { return {Complex{1.0}, Complex{}}; }
  static PureState one() { return {Complex{}, Complex{1.0}}; }

  double norm_squared() const { return std::norm(amp0) + std::norm(amp1); }
};

UnitaryMat hadamard();
/// diag(e^{-i a/2}, e^{+i a/2}). Throws std::invalid_argument for non-finite a.
UnitaryMat rz(double angle);
/// [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]]. Throws for non-finite a.
UnitaryMat ry(double angle);
/// rz(gamma) * ry(beta) * rz(alpha): alpha acts first.
UnitaryMat euler_unitary(double alpha, double beta, double gamma);

PureState apply(const PureState& state, const UnitaryMat& gate);
/// Applies the diagonal rz(angle) without building the matrix.
PureState apply_rz(const PureState& state, double angle);
PureState apply_ry(const PureState& state, double angle);

/// |amp0|^2 - |amp1|^2.
double expect_z(const PureState& state);

/// <a|b>
Complex inner(const PureState& a, const PureState& b);

/// Flat row-major (B, N, M, 2) amplitude array: one qubit per
/// (batch element, post-node, pre-node) triple.
class StateBatch {
 public:
  StateBatch(std::size_t batch, std::size_t n_out, std::size_t n_in);

  std::size_t batch() const { return b_; }
  std::size_t n_out() const { return n_; }
  std::size_t n_in() const { return m_; }
  std::size_t slices() const { return b_ * n_ * m_; }

  PureState get(std::size_t b, std::size_t n, std::size_t m) const;
  void set(std::size_t b, std::size_t n, std::size_t m, const PureState& s);

  /// Every slice set to H|0>.
  void fill_plus();
  void apply_all(const UnitaryMat& gate);
  void apply_at(std::size_t b, std::size_t n, std::size_t m, const UnitaryMat& gate);
  /// Writes <Z> per slice into out (size B*N*M, same order).
  void expect_z_all(std::span<double> out) const;

  std::span<const Complex> amplitudes() const { return amps_; }
  std::span<Complex> amplitudes() { return amps_; }

 private:
  std::size_t index(std::size_t b, std::size_t n, std::size_t m) const;

  std::size_t b_, n_, m_;
  std::vector<Complex> amps_;
};

}  // namespace qkan
