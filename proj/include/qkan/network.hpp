#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qkan/daruan.hpp"
#include "qkan/rng.hpp"

namespace qkan {

/// Dense edge grid of DARUANs; output_j = sum_i phi_{j,i}(x_i).
struct QkanLayer {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  std::vector<DaruanParams> edges;  // row-major [n_out][n_in]

  static QkanLayer random(std::size_t n_in, std::size_t n_out, std::size_t r, Rng& rng,
                          const DaruanInit& init = {});

  DaruanParams& edge(std::size_t j, std::size_t i) { return edges[j * n_in + i]; }
  const DaruanParams& edge(std::size_t j, std::size_t i) const { return edges[j * n_in + i]; }
  std::size_t reps() const { return edges.empty() ? 0 : edges.front().reps(); }
  std::size_t param_count() const;
  void validate() const;
};

struct LinearLayer {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  std::vector<double> weight;  // row-major [n_out][n_in]
  std::vector<double> bias;

  /// weight ~ U(-1/sqrt(n_in), 1/sqrt(n_in)), bias 0.
  static LinearLayer random(std::size_t n_in, std::size_t n_out, Rng& rng);

  std::size_t param_count() const { return n_in * n_out + n_out; }
  std::vector<double> apply(std::span<const double> x) const;
  void validate() const;
};

struct QkanNetwork {
  std::vector<std::size_t> shape;  // n_0 ... n_L
  std::vector<QkanLayer> layers;
  std::optional<LinearLayer> encoder;
  std::optional<LinearLayer> decoder;

  std::size_t input_dim() const { return encoder ? encoder->n_in : shape.front(); }
  std::size_t output_dim() const { return decoder ? decoder->n_out : shape.back(); }

  /// Throws std::invalid_argument on inconsistent dimensions or parameters.
  void validate() const;

  // Flat parameter order: encoder (weight row-major, bias), then every
  // edge in (layer, j, i) order using DaruanParams' flat layout, then decoder.
  std::vector<double> pack() const;
  void unpack(std::span<const double> flat);
};

struct NetworkGradient {
  std::vector<double> params;  // pack() layout
  std::vector<double> d_input;
};

std::vector<double> layer_forward(const QkanLayer& layer, std::span<const double> x);

/// Same as layer_forward over a batch, realized on a (B, N, M, 2) state
/// array with explicit gate matrices. xs is row-major [batch][n_in].
std::vector<double> layer_forward_batch(const QkanLayer& layer, std::span<const double> xs, std::size_t batch);

std::vector<double> network_forward(const QkanNetwork& net, std::span<const double> x);

NetworkGradient network_backward(const QkanNetwork& net, std::span<const double> x, std::span<const double> upstream);

struct BackwardResult {
  std::vector<double> output;
  std::vector<double> d_input;
};

/// Adds gradients of upstream . network_forward(x) into grad (pack() layout).
BackwardResult network_backward_accumulate(const QkanNetwork& net, std::span<const double> x,
                                                std::span<const double> upstream, std::span<double> grad);

/// Exact trainable-scalar count: 5r+6 per edge plus n_in*n_out+n_out per linear layer.
std::size_t param_count(const QkanNetwork& net);

/// Plain QKAN with uniform r over the given node shape.
QkanNetwork make_qkan(const std::vector<std::size_t>& shape, std::size_t r, Rng& rng, const DaruanInit& init = {});

/// Bottleneck width for an HQKAN side of dimension d: floor(log2 d) + 1, at least 2.
std::size_t latent_dim(std::size_t d);

/// Linear encoder in_dim -> latent_dim(in_dim), QKAN core over
/// [latent_dim(in_dim), hidden..., latent_dim(out_dim)], linear decoder to out_dim.
QkanNetwork make_hqkan(std::size_t in_dim, std::size_t out_dim, std::size_t r,
                       const std::vector<std::size_t>& hidden_shape, Rng& rng, const DaruanInit& init = {});

/// Extends every edge of every layer to new_r repetitions (output-preserving).
QkanNetwork extend_network(const QkanNetwork& net, std::size_t new_r);

}  // namespace qkan
