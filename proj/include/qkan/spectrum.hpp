#pragma once

// Fourier-support analysis of a DARUAN's circuit output. With encoding
// weights w_1..w_r the readout is a real trigonometric sum over
// { sum_l m_l w_l : m_l in {-1, 0, 1} }; fitting samples onto that basis
// by least squares and checking the residual verifies the support claim.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qkan/daruan.hpp"
#include "qkan/statevector.hpp"

namespace qkan {

inline constexpr double kFrequencyMergeTol = 1e-9;
inline constexpr double kMaxConditionNumber = 1e12;

struct SpectrumReport {
  std::vector<double> weights;
  std::vector<double> frequencies;  // sorted, symmetric, contains 0
  std::size_t nonzero_count = 0;
  double max_frequency = 0.0;       // sum_l |w_l|
  std::vector<Complex> coefficients;  // aligned with frequencies
  double residual_l2 = 0.0;         // RMS residual over the sample grid
  std::size_t sample_count = 0;
  double sample_span = 0.0;         // grid covers [0, sample_span)
  double condition_number = 0.0;

  Complex coefficient(double omega) const;
};

std::vector<double> enumerate_frequencies(std::span<const double> weights);

/// 4 * (2|freqs| + 1).
std::size_t default_sample_count(std::size_t frequency_count);

/// Least-squares projection of raw_expectation(p, .) onto an arbitrary
/// symmetric frequency set. sample_count 0 picks the default, raised to
/// four points per shortest period when the span is long.
/// Throws DegenerateSpectrum when the design is ill-conditioned.
SpectrumReport fit_spectrum(const DaruanParams& p, std::span<const double> frequencies, std::size_t sample_count = 0);

/// fit_spectrum on enumerate_frequencies(p.enc_w).
SpectrumReport empirical_spectrum(const DaruanParams& p, std::size_t sample_count = 0);

/// (residual_l2 < tol, report).
std::pair<bool, SpectrumReport> verify_spectrum(const DaruanParams& p, double tol);

}  // namespace qkan
