#include "qkan/spectrum.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qkan/error.hpp"

namespace qkan {

namespace {

bool all_integral(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::abs(v - std::round(v)) < kFrequencyMergeTol; });
}

std::vector<double> positive_part(std::span<const double> frequencies) {
  std::vector<double> pos;
  for (double f : frequencies) {
    if (f > kFrequencyMergeTol) pos.push_back(f);
  }
  std::sort(pos.begin(), pos.end());
  return pos;
}

}  // namespace

Complex SpectrumReport::coefficient(double omega) const {
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    if (std::abs(frequencies[k] - omega) < kFrequencyMergeTol) return coefficients[k];
  }
  return {};
}

std::vector<double> enumerate_frequencies(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("enumerate_frequencies: need at least one weight");
  // Grow the set one weight at a time, merging near-equal sums as we go so
  // the working set stays at the number of distinct frequencies.
  std::vector<double> sums{0.0};
  for (double w : weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("enumerate_frequencies: non-finite weight");
    std::vector<double> next;
    next.reserve(sums.size() * 3);
    for (double s : sums) {
      next.push_back(s - w);
      next.push_back(s);
      next.push_back(s + w);
    }
    std::sort(next.begin(), next.end());
    sums.clear();
    for (double v : next) {
      if (sums.empty() || v - sums.back() > kFrequencyMergeTol) sums.push_back(v);
    }
  }
  // Rebuild from magnitudes so the result is exactly symmetric with an exact 0.
  std::vector<double> mags;
  for (double s : sums) mags.push_back(std::abs(s));
  std::sort(mags.begin(), mags.end());
  std::vector<double> pos;
  for (double m : mags) {
    if (m <= kFrequencyMergeTol) continue;
    if (pos.empty() || m - pos.back() > kFrequencyMergeTol) pos.push_back(m);
  }
  std::vector<double> out;
  out.reserve(2 * pos.size() + 1);
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) out.push_back(-*it);
  out.push_back(0.0);
  out.insert(out.end(), pos.begin(), pos.end());
  return out;
}

std::size_t default_sample_count(std::size_t frequency_count) { return 4 * (2 * frequency_count + 1); }

SpectrumReport fit_spectrum(const DaruanParams& p, std::span<const double> frequencies, std::size_t sample_count) {
  p.validate();
  const std::vector<double> pos = positive_part(frequencies);
  const std::size_t n_freq = 2 * pos.size() + 1;
  double span = 2.0 * std::numbers::pi;
  if (!all_integral(p.enc_w) && !pos.empty()) {
    double min_gap = pos.front();
    for (std::size_t k = 1; k < pos.size(); ++k) min_gap = std::min(min_gap, pos[k] - pos[k - 1]);
    span = 8.0 * std::numbers::pi / min_gap;
  }
  if (sample_count == 0) {
    sample_count = default_sample_count(n_freq);
    // A long span needs enough points for four per shortest period.
    if (!pos.empty()) {
      const double needed = std::ceil(2.0 * span * pos.back() / std::numbers::pi);
      if (needed > 1e6) throw DegenerateSpectrum("fit_spectrum: frequency gap too small to resolve");
      sample_count = std::max(sample_count, static_cast<std::size_t>(needed));
    }
  }
  if (sample_count < 2 * n_freq + 1) {
    throw std::invalid_argument("fit_spectrum: sample_count " + std::to_string(sample_count) + " < 2|Omega|+1 = " +
                                std::to_string(2 * n_freq + 1));
  }

  // Real basis: 1, cos(w x), sin(w x) for each positive w.
  const auto rows = static_cast<Eigen::Index>(sample_count);
  const auto cols = static_cast<Eigen::Index>(n_freq);
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const double x = span * static_cast<double>(k) / static_cast<double>(sample_count);
    y(k) = raw_expectation(p, x);
    design(k, 0) = 1.0;
    for (std::size_t f = 0; f < pos.size(); ++f) {
      const auto c = static_cast<Eigen::Index>(1 + 2 * f);
      design(k, c) = std::cos(pos[f] * x);
      design(k, c + 1) = std::sin(pos[f] * x);
    }
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  if (!(cond <= kMaxConditionNumber)) {
    throw DegenerateSpectrum("fit_spectrum: design condition number " + std::to_string(cond) + " exceeds 1e12");
  }
  const Eigen::VectorXd coef = svd.solve(y);
  const Eigen::VectorXd resid = design * coef - y;

  SpectrumReport rep;
  rep.weights = p.enc_w;
  rep.max_frequency = 0.0;
  for (double w : p.enc_w) rep.max_frequency += std::abs(w);
  rep.nonzero_count = 2 * pos.size();
  rep.sample_count = sample_count;
  rep.sample_span = span;
  rep.condition_number = cond;
  rep.residual_l2 = std::sqrt(resid.squaredNorm() / static_cast<double>(sample_count));

  for (auto it = pos.rbegin(); it != pos.rend(); ++it) rep.frequencies.push_back(-*it);
  rep.frequencies.push_back(0.0);
  rep.frequencies.insert(rep.frequencies.end(), pos.begin(), pos.end());

  // a cos + b sin = c e^{iwx} + conj(c) e^{-iwx} with c = (a - i b) / 2.
  rep.coefficients.assign(n_freq, Complex{});
  const std::size_t zero = pos.size();
  rep.coefficients[zero] = Complex{coef(0)};
  for (std::size_t f = 0; f < pos.size(); ++f) {
    const double a = coef(static_cast<Eigen::Index>(1 + 2 * f));
    const double b = coef(static_cast<Eigen::Index>(2 + 2 * f));
    rep.coefficients[zero + 1 + f] = Complex{a / 2.0, -b / 2.0};
    rep.coefficients[zero - 1 - f] = Complex{a / 2.0, b / 2.0};
  }
  return rep;
}

SpectrumReport empirical_spectrum(const DaruanParams& p, std::size_t sample_count) {
  const auto freqs = enumerate_frequencies(p.enc_w);
  return fit_spectrum(p, freqs, sample_count);
}

std::pair<bool, SpectrumReport> verify_spectrum(const DaruanParams& p, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("verify_spectrum: tol must be positive");
  SpectrumReport rep = empirical_spectrum(p);
  const bool ok = rep.residual_l2 < tol;
  return {ok, std::move(rep)};
}

}  // namespace qkan
