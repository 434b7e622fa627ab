#pragma once

// Replacing trained DARUAN edges with clamped B-splines for classical
// inference. The spline absorbs w_quant * <Z>(x) + out_bias; the silu
// residual term is carried over as-is.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "qkan/daruan.hpp"
#include "qkan/network.hpp"

namespace qkan {

struct Domain {
  double lo = 0.0;
  double hi = 1.0;
};

/// Open uniform knot vector: degree+1 copies of lo, grid-1 interior knots,
/// degree+1 copies of hi.
std::vector<double> clamped_knots(Domain d, std::size_t grid, std::size_t degree);

/// Values of all (knots.size() - degree - 1) basis functions at x (Cox-de Boor).
/// Throws DomainError when x lies outside [knots.front(), knots.back()].
std::vector<double> bspline_basis(std::span<const double> knots, std::size_t degree, double x);

struct SplineModel {
  std::size_t degree = 3;
  std::size_t grid = 20;
  std::vector<double> knots;
  std::vector<double> coefficients;  // grid + degree
  Domain domain;
  double w_base = 0.0;    // silu residual weight, evaluated symbolically
  double out_bias = 0.0;  // source bias, already folded into the coefficients
  double max_fit_error = 0.0;
  double rms_fit_error = 0.0;

  void validate() const;
};

struct Samples {
  std::vector<double> xs;
  std::vector<double> ys;
};

/// count uniform points on [lo, hi] of forward(p, x) - w_base * silu(x).
Samples sample_activation(const DaruanParams& p, double lo, double hi, std::size_t count);

/// Least-squares spline of the given grid size and degree on [min xs, max xs].
/// Throws FitError when the design matrix is rank deficient.
SplineModel fit_spline(std::span<const double> xs, std::span<const double> ys, std::size_t grid, std::size_t degree);

/// w_base * silu(x) + sum_i c_i B_i(clamp(x)).
double eval_spline(const SplineModel& m, double x);
/// Spline part only (no silu term).
double eval_spline_part(const SplineModel& m, double x);

struct SplineLayer {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  std::vector<SplineModel> edges;  // row-major [n_out][n_in]

  const SplineModel& edge(std::size_t j, std::size_t i) const { return edges[j * n_in + i]; }
};

struct SplineNetwork {
  std::vector<std::size_t> shape;
  std::vector<SplineLayer> layers;
  std::optional<LinearLayer> encoder;
  std::optional<LinearLayer> decoder;
};

struct EdgeKey {
  std::size_t layer = 0;
  std::size_t j = 0;  // output node
  std::size_t i = 0;  // input node
  auto operator<=>(const EdgeKey&) const = default;
};

struct EdgeFitReport {
  EdgeKey edge;
  Domain domain;
  double max_error = 0.0;
  double rms_error = 0.0;
};

struct DistillOptions {
  std::size_t grid = 20;
  std::size_t degree = 3;
  std::size_t samples_per_edge = 0;  // 0 -> 10 * (grid + degree)
};

struct DistillResult {
  SplineNetwork network;
  std::vector<EdgeFitReport> report;
};

/// Per-edge input range observed over a calibration set, widened by
/// widen * (hi - lo) on each side.
std::map<EdgeKey, Domain> calibrate_domains(const QkanNetwork& net, std::span<const std::vector<double>> inputs,
                                            double widen = 0.1);

/// Fits every edge on its calibrated domain. Fit failures are rethrown as
/// FitError naming the edge.
DistillResult distill_network(const QkanNetwork& net, const std::map<EdgeKey, Domain>& domains,
                              const DistillOptions& opts = {});

struct ClampCounter {
  std::size_t evaluations = 0;
  std::size_t clamped = 0;
};

std::vector<double> spline_network_forward(const SplineNetwork& net, std::span<const double> x,
                                           ClampCounter* clamps = nullptr);

}  // namespace qkan
