#include "qkan/statevector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qkan {

namespace {

void require_finite(double angle, const char* gate) {
  if (!std::isfinite(angle)) {
    throw std::invalid_argument(std::string(gate) + ": non-finite rotation angle");
  }
}

}  // namespace

UnitaryMat UnitaryMat::adjoint() const {
  UnitaryMat out;
  out(0, 0) = std::conj((*this)(0, 0));
  out(0, 1) = std::conj((*this)(1, 0));
  out(1, 0) = std::conj((*this)(0, 1));
  out(1, 1) = std::conj((*this)(1, 1));
  return out;
}

Complex UnitaryMat::det() const {
  return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0);
}

UnitaryMat operator*(const UnitaryMat& a, const UnitaryMat& b) {
  UnitaryMat out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      out(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j);
    }
  }
  return out;
}

UnitaryMat hadamard() {
  const double s = 1.0 / std::sqrt(2.0);
  UnitaryMat h;
  h.m = {Complex{s}, Complex{s}, Complex{s}, Complex{-s}};
  return h;
}

UnitaryMat rz(double angle) {
  require_finite(angle, "rz");
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  UnitaryMat u;
  u.m = {Complex{c, -s}, Complex{}, Complex{}, Complex{c, s}};
  return u;
}

UnitaryMat ry(double angle) {
  require_finite(angle, "ry");
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  UnitaryMat u;
  u.m = {Complex{c}, Complex{-s}, Complex{s}, Complex{c}};
  return u;
}

UnitaryMat euler_unitary(double alpha, double beta, double gamma) {
  return rz(gamma) * ry(beta) * rz(alpha);
}

PureState apply(const PureState& state, const UnitaryMat& gate) {
  return {gate(0, 0) * state.amp0 + gate(0, 1) * state.amp1,
          gate(1, 0) * state.amp0 + gate(1, 1) * state.amp1};
}

PureState apply_rz(const PureState& state, double angle) {
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  return {state.amp0 * Complex{c, -s}, state.amp1 * Complex{c, s}};
}

PureState apply_ry(const PureState& state, double angle) {
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  return {c * state.amp0 - s * state.amp1, s * state.amp0 + c * state.amp1};
}

double expect_z(const PureState& state) {
  return std::norm(state.amp0) - std::norm(state.amp1);
}

Complex inner(const PureState& a, const PureState& b) {
  return std::conj(a.amp0) * b.amp0 + std::conj(a.amp1) * b.amp1;
}

StateBatch::StateBatch(std::size_t batch, std::size_t n_out, std::size_t n_in)
    : b_(batch), n_(n_out), m_(n_in), amps_(2 * batch * n_out * n_in) {
  for (std::size_t k = 0; k < slices(); ++k) {
    amps_[2 * k] = Complex{1.0};
  }
}

std::size_t StateBatch::index(std::size_t b, std::size_t n, std::size_t m) const {
  if (b >= b_ || n >= n_ || m >= m_) {
    throw std::out_of_range("StateBatch: slice index out of range");
  }
  return 2 * ((b * n_ + n) * m_ + m);
}

PureState StateBatch::get(std::size_t b, std::size_t n, std::size_t m) const {
  const std::size_t k = index(b, n, m);
  return {amps_[k], amps_[k + 1]};
}

void StateBatch::set(std::size_t b, std::size_t n, std::size_t m, const PureState& s) {
  const std::size_t k = index(b, n, m);
  amps_[k] = s.amp0;
  amps_[k + 1] = s.amp1;
}

void StateBatch::fill_plus() {
  const double s = 1.0 / std::sqrt(2.0);
  for (auto& a : amps_) a = Complex{s};
}

void StateBatch::apply_all(const UnitaryMat& gate) {
  for (std::size_t k = 0; k < slices(); ++k) {
    const PureState out = apply({amps_[2 * k], amps_[2 * k + 1]}, gate);
    amps_[2 * k] = out.amp0;
    amps_[2 * k + 1] = out.amp1;
  }
}

void StateBatch::apply_at(std::size_t b, std::size_t n, std::size_t m, const UnitaryMat& gate) {
  set(b, n, m, apply(get(b, n, m), gate));
}

void StateBatch::expect_z_all(std::span<double> out) const {
  if (out.size() != slices()) {
    throw std::invalid_argument("StateBatch::expect_z_all: output size mismatch");
  }
  for (std::size_t k = 0; k < slices(); ++k) {
    out[k] = std::norm(amps_[2 * k]) - std::norm(amps_[2 * k + 1]);
  }
}

}  // namespace qkan
