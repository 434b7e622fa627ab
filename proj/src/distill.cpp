#include "qkan/distill.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qkan/error.hpp"

namespace qkan {

std::vector<double> clamped_knots(Domain d, std::size_t grid, std::size_t degree) {
  if (grid == 0) throw std::invalid_argument("clamped_knots: grid must be >= 1");
  if (!(d.lo < d.hi)) throw std::invalid_argument("clamped_knots: empty domain");
  std::vector<double> knots;
  knots.reserve(grid + 2 * degree + 1);
  for (std::size_t k = 0; k < degree; ++k) knots.push_back(d.lo);
  for (std::size_t g = 0; g <= grid; ++g) {
    knots.push_back(g == grid ? d.hi : d.lo + (d.hi - d.lo) * static_cast<double>(g) / static_cast<double>(grid));
  }
  for (std::size_t k = 0; k < degree; ++k) knots.push_back(d.hi);
  return knots;
}

std::vector<double> bspline_basis(std::span<const double> knots, std::size_t degree, double x) {
  if (knots.size() < degree + 2) throw std::invalid_argument("bspline_basis: too few knots for degree");
  const double lo = knots.front();
  const double hi = knots.back();
  if (!(x >= lo && x <= hi)) {
    throw DomainError("bspline_basis: x = " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }

  // Degree 0: indicator of the half-open span containing x; the right end
  // belongs to the last non-degenerate span.
  const std::size_t spans = knots.size() - 1;
  std::vector<double> n(spans, 0.0);
  std::size_t mu = spans;
  if (x == hi) {
    for (std::size_t s = spans; s-- > 0;) {
      if (knots[s] < knots[s + 1]) {
        mu = s;
        break;
      }
    }
  } else {
    for (std::size_t s = 0; s < spans; ++s) {
      if (knots[s] <= x && x < knots[s + 1]) {
        mu = s;
        break;
      }
    }
  }
  if (mu < spans) n[mu] = 1.0;

  for (std::size_t d = 1; d <= degree; ++d) {
    std::vector<double> next(n.size() - 1, 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) {
      double v = 0.0;
      const double left = knots[i + d] - knots[i];
      if (left > 0.0) v += (x - knots[i]) / left * n[i];
      const double right = knots[i + d + 1] - knots[i + 1];
      if (right > 0.0) v += (knots[i + d + 1] - x) / right * n[i + 1];
      next[i] = v;
    }
    n = std::move(next);
  }
  return n;
}

void SplineModel::validate() const {
  if (degree < 1 || grid < 1) throw std::invalid_argument("SplineModel: degree and grid must be >= 1");
  if (knots.size() != grid + 2 * degree + 1) throw std::invalid_argument("SplineModel: knot count mismatch");
  if (coefficients.size() != grid + degree) throw std::invalid_argument("SplineModel: coefficient count mismatch");
  if (!std::is_sorted(knots.begin(), knots.end())) throw std::invalid_argument("SplineModel: knots not sorted");
  if (!(domain.lo < domain.hi)) throw std::invalid_argument("SplineModel: empty domain");
}

Samples sample_activation(const DaruanParams& p, double lo, double hi, std::size_t count) {
  if (count < 2) throw std::invalid_argument("sample_activation: count must be >= 2");
  if (!(lo < hi)) throw std::invalid_argument("sample_activation: lo must be < hi");
  Samples s;
  s.xs.resize(count);
  s.ys.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double x =
        k + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    s.xs[k] = x;
    s.ys[k] = p.w_quant * raw_expectation(p, x) + p.out_bias;
  }
  return s;
}

SplineModel fit_spline(std::span<const double> xs, std::span<const double> ys, std::size_t grid, std::size_t degree) {
  if (xs.size() != ys.size()) throw DimensionMismatch("fit_spline: xs and ys differ in length");
  if (degree < 1 || grid < 1) throw std::invalid_argument("fit_spline: degree and grid must be >= 1");
  if (xs.size() < grid + degree) {
    throw std::invalid_argument("fit_spline: need at least grid + degree = " + std::to_string(grid + degree) +
                                " samples, got " + std::to_string(xs.size()));
  }
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  SplineModel m;
  m.degree = degree;
  m.grid = grid;
  m.domain = {*lo_it, *hi_it};
  if (!(m.domain.lo < m.domain.hi)) throw FitError("fit_spline: samples span an empty interval");
  m.knots = clamped_knots(m.domain, grid, degree);

  const auto rows = static_cast<Eigen::Index>(xs.size());
  const auto cols = static_cast<Eigen::Index>(grid + degree);
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd target(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const auto basis = bspline_basis(m.knots, degree, xs[static_cast<std::size_t>(k)]);
    for (Eigen::Index c = 0; c < cols; ++c) design(k, c) = basis[static_cast<std::size_t>(c)];
    target(k) = ys[static_cast<std::size_t>(k)];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < cols) {
    throw FitError("fit_spline: design matrix rank " + std::to_string(qr.rank()) + " < " + std::to_string(cols) +
                   " (samples do not cover every knot span)");
  }
  const Eigen::VectorXd coef = qr.solve(target);
  m.coefficients.assign(coef.data(), coef.data() + coef.size());

  const Eigen::VectorXd resid = design * coef - target;
  m.max_fit_error = resid.cwiseAbs().maxCoeff();
  m.rms_fit_error = std::sqrt(resid.squaredNorm() / static_cast<double>(rows));
  return m;
}

double eval_spline_part(const SplineModel& m, double x) {
  const double xc = std::clamp(x, m.domain.lo, m.domain.hi);
  const auto basis = bspline_basis(m.knots, m.degree, xc);
  double acc = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) acc += m.coefficients[i] * basis[i];
  return acc;
}

double eval_spline(const SplineModel& m, double x) { return m.w_base * silu(x) + eval_spline_part(m, x); }

std::map<EdgeKey, Domain> calibrate_domains(const QkanNetwork& net, std::span<const std::vector<double>> inputs,
                                            double widen) {
  if (inputs.empty()) throw std::invalid_argument("calibrate_domains: empty calibration set");
  // Edges (l, j, i) share the input node x_{l,i}, so track per input node.
  std::vector<std::vector<Domain>> node_range(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    node_range[l].assign(net.layers[l].n_in, Domain{INFINITY, -INFINITY});
  }
  for (const auto& x : inputs) {
    std::vector<double> h = net.encoder ? net.encoder->apply(x) : x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      if (h.size() != net.layers[l].n_in) throw DimensionMismatch("calibrate_domains: input length mismatch");
      for (std::size_t i = 0; i < h.size(); ++i) {
        node_range[l][i].lo = std::min(node_range[l][i].lo, h[i]);
        node_range[l][i].hi = std::max(node_range[l][i].hi, h[i]);
      }
      h = layer_forward(net.layers[l], h);
    }
  }

  std::map<EdgeKey, Domain> out;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (std::size_t i = 0; i < net.layers[l].n_in; ++i) {
      Domain d = node_range[l][i];
      const double pad = std::max(widen * (d.hi - d.lo), 1e-3);
      d.lo -= pad;
      d.hi += pad;
      for (std::size_t j = 0; j < net.layers[l].n_out; ++j) out[{l, j, i}] = d;
    }
  }
  return out;
}

DistillResult distill_network(const QkanNetwork& net, const std::map<EdgeKey, Domain>& domains,
                              const DistillOptions& opts) {
  const std::size_t samples = opts.samples_per_edge ? opts.samples_per_edge : 10 * (opts.grid + opts.degree);
  DistillResult res;
  res.network.shape = net.shape;
  res.network.encoder = net.encoder;
  res.network.decoder = net.decoder;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const QkanLayer& layer = net.layers[l];
    SplineLayer sl{layer.n_in, layer.n_out, {}};
    for (std::size_t j = 0; j < layer.n_out; ++j) {
      for (std::size_t i = 0; i < layer.n_in; ++i) {
        const EdgeKey key{l, j, i};
        const auto it = domains.find(key);
        if (it == domains.end()) {
          throw std::invalid_argument("distill_network: no domain for edge (" + std::to_string(l) + "," +
                                      std::to_string(j) + "," + std::to_string(i) + ")");
        }
        const DaruanParams& p = layer.edge(j, i);
        SplineModel m;
        try {
          const Samples s = sample_activation(p, it->second.lo, it->second.hi, samples);
          m = fit_spline(s.xs, s.ys, opts.grid, opts.degree);
        } catch (const NumericalError& e) {
          throw FitError("edge (" + std::to_string(l) + "," + std::to_string(j) + "," + std::to_string(i) +
                         "): " + e.what());
        }
        m.w_base = p.w_base;
        m.out_bias = p.out_bias;
        res.report.push_back({key, m.domain, m.max_fit_error, m.rms_fit_error});
        sl.edges.push_back(std::move(m));
      }
    }
    res.network.layers.push_back(std::move(sl));
  }
  return res;
}

std::vector<double> spline_network_forward(const SplineNetwork& net, std::span<const double> x,
                                           ClampCounter* clamps) {
  std::vector<double> h = net.encoder ? net.encoder->apply(x) : std::vector<double>(x.begin(), x.end());
  for (const auto& layer : net.layers) {
    if (h.size() != layer.n_in) throw DimensionMismatch("spline_network_forward: input length mismatch");
    std::vector<double> out(layer.n_out, 0.0);
    for (std::size_t j = 0; j < layer.n_out; ++j) {
      for (std::size_t i = 0; i < layer.n_in; ++i) {
        const SplineModel& m = layer.edge(j, i);
        if (clamps) {
          ++clamps->evaluations;
          if (h[i] < m.domain.lo || h[i] > m.domain.hi) ++clamps->clamped;
        }
        out[j] += eval_spline(m, h[i]);
      }
    }
    h = std::move(out);
  }
  return net.decoder ? net.decoder->apply(h) : h;
}

}  // namespace qkan
