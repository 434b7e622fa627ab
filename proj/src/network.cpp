#include "qkan/network.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qkan/error.hpp"
#include "qkan/statevector.hpp"

namespace qkan {

namespace {

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                            std::to_string(got));
  }
}

// Backward through an affine map; returns dL/dx.
std::vector<double> linear_backward(const LinearLayer& lin, std::span<const double> x,
                                    std::span<const double> upstream, std::span<double> grad) {
  std::vector<double> dx(lin.n_in, 0.0);
  const std::size_t bias_off = lin.n_in * lin.n_out;
  for (std::size_t j = 0; j < lin.n_out; ++j) {
    const double g = upstream[j];
    for (std::size_t i = 0; i < lin.n_in; ++i) {
      grad[j * lin.n_in + i] += g * x[i];
      dx[i] += lin.weight[j * lin.n_in + i] * g;
    }
    grad[bias_off + j] += g;
  }
  return dx;
}

}  // namespace

QkanLayer QkanLayer::random(std::size_t n_in, std::size_t n_out, std::size_t r, Rng& rng, const DaruanInit& init) {
  if (n_in == 0 || n_out == 0) throw std::invalid_argument("QkanLayer: node counts must be >= 1");
  QkanLayer layer{n_in, n_out, {}};
  layer.edges.reserve(n_in * n_out);
  for (std::size_t k = 0; k < n_in * n_out; ++k) layer.edges.push_back(DaruanParams::random(r, rng, init));
  return layer;
}

std::size_t QkanLayer::param_count() const {
  std::size_t n = 0;
  for (const auto& e : edges) n += e.size();
  return n;
}

void QkanLayer::validate() const {
  if (n_in == 0 || n_out == 0) throw std::invalid_argument("QkanLayer: node counts must be >= 1");
  if (edges.size() != n_in * n_out) throw std::invalid_argument("QkanLayer: edge grid size mismatch");
  for (const auto& e : edges) {
    e.validate();
    if (e.reps() != reps()) throw std::invalid_argument("QkanLayer: edges disagree on r");
  }
}

LinearLayer LinearLayer::random(std::size_t n_in, std::size_t n_out, Rng& rng) {
  if (n_in == 0 || n_out == 0) throw std::invalid_argument("LinearLayer: dims must be >= 1");
  LinearLayer lin{n_in, n_out, std::vector<double>(n_in * n_out), std::vector<double>(n_out, 0.0)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(n_in));
  for (double& w : lin.weight) w = rng.uniform(-bound, bound);
  return lin;
}

std::vector<double> LinearLayer::apply(std::span<const double> x) const {
  require_size(x.size(), n_in, "LinearLayer");
  std::vector<double> y(bias);
  for (std::size_t j = 0; j < n_out; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_in; ++i) acc += weight[j * n_in + i] * x[i];
    y[j] += acc;
  }
  return y;
}

void LinearLayer::validate() const {
  if (n_in == 0 || n_out == 0) throw std::invalid_argument("LinearLayer: dims must be >= 1");
  if (weight.size() != n_in * n_out || bias.size() != n_out) {
    throw std::invalid_argument("LinearLayer: weight/bias size mismatch");
  }
  for (double v : weight) {
    if (!std::isfinite(v)) throw std::invalid_argument("LinearLayer: non-finite weight");
  }
  for (double v : bias) {
    if (!std::isfinite(v)) throw std::invalid_argument("LinearLayer: non-finite bias");
  }
}

void QkanNetwork::validate() const {
  if (shape.size() < 2) throw std::invalid_argument("QkanNetwork: shape needs at least two node counts");
  if (layers.size() + 1 != shape.size()) throw std::invalid_argument("QkanNetwork: layer count disagrees with shape");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (layers[l].n_in != shape[l] || layers[l].n_out != shape[l + 1]) {
      throw std::invalid_argument("QkanNetwork: layer " + std::to_string(l) + " dims disagree with shape");
    }
  }
  if (encoder) {
    encoder->validate();
    if (encoder->n_out != shape.front()) throw std::invalid_argument("QkanNetwork: encoder output != n_0");
  }
  if (decoder) {
    decoder->validate();
    if (decoder->n_in != shape.back()) throw std::invalid_argument("QkanNetwork: decoder input != n_L");
  }
}

std::vector<double> QkanNetwork::pack() const {
  std::vector<double> flat;
  flat.reserve(param_count(*this));
  if (encoder) {
    flat.insert(flat.end(), encoder->weight.begin(), encoder->weight.end());
    flat.insert(flat.end(), encoder->bias.begin(), encoder->bias.end());
  }
  for (const auto& layer : layers) {
    for (const auto& e : layer.edges) {
      const auto f = e.flat();
      flat.insert(flat.end(), f.begin(), f.end());
    }
  }
  if (decoder) {
    flat.insert(flat.end(), decoder->weight.begin(), decoder->weight.end());
    flat.insert(flat.end(), decoder->bias.begin(), decoder->bias.end());
  }
  return flat;
}

void QkanNetwork::unpack(std::span<const double> flat) {
  require_size(flat.size(), param_count(*this), "QkanNetwork::unpack");
  std::size_t k = 0;
  auto take_linear = [&](LinearLayer& lin) {
    for (double& w : lin.weight) w = flat[k++];
    for (double& b : lin.bias) b = flat[k++];
  };
  if (encoder) take_linear(*encoder);
  for (auto& layer : layers) {
    for (auto& e : layer.edges) {
      e.read_flat(flat.subspan(k, e.size()));
      k += e.size();
    }
  }
  if (decoder) take_linear(*decoder);
}

std::vector<double> layer_forward(const QkanLayer& layer, std::span<const double> x) {
  require_size(x.size(), layer.n_in, "layer_forward");
  std::vector<double> out(layer.n_out, 0.0);
  for (std::size_t j = 0; j < layer.n_out; ++j) {
    for (std::size_t i = 0; i < layer.n_in; ++i) out[j] += forward(layer.edge(j, i), x[i]);
  }
  return out;
}

std::vector<double> layer_forward_batch(const QkanLayer& layer, std::span<const double> xs, std::size_t batch) {
  require_size(xs.size(), batch * layer.n_in, "layer_forward_batch");
  StateBatch states(batch, layer.n_out, layer.n_in);
  states.fill_plus();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < layer.n_out; ++j) {
      for (std::size_t i = 0; i < layer.n_in; ++i) {
        const DaruanParams& p = layer.edge(j, i);
        const double x = xs[b * layer.n_in + i];
        for (std::size_t l = 0; l <= p.reps(); ++l) {
          states.apply_at(b, j, i, euler_unitary(p.angles[l][0], p.angles[l][1], p.angles[l][2]));
          if (l < p.reps()) states.apply_at(b, j, i, rz(p.enc_w[l] * x + p.enc_b[l]));
        }
      }
    }
  }
  std::vector<double> z(states.slices());
  states.expect_z_all(z);

  std::vector<double> out(batch * layer.n_out, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < layer.n_out; ++j) {
      for (std::size_t i = 0; i < layer.n_in; ++i) {
        const DaruanParams& p = layer.edge(j, i);
        const double x = xs[b * layer.n_in + i];
        out[b * layer.n_out + j] +=
            p.w_base * silu(x) + p.w_quant * z[(b * layer.n_out + j) * layer.n_in + i] + p.out_bias;
      }
    }
  }
  return out;
}

std::vector<double> network_forward(const QkanNetwork& net, std::span<const double> x) {
  require_size(x.size(), net.input_dim(), "network_forward");
  std::vector<double> h = net.encoder ? net.encoder->apply(x) : std::vector<double>(x.begin(), x.end());
  for (const auto& layer : net.layers) h = layer_forward(layer, h);
  return net.decoder ? net.decoder->apply(h) : h;
}

BackwardResult network_backward_accumulate(const QkanNetwork& net, std::span<const double> x,
                                                std::span<const double> upstream, std::span<double> grad) {
  require_size(x.size(), net.input_dim(), "network_backward");
  require_size(upstream.size(), net.output_dim(), "network_backward upstream");
  require_size(grad.size(), param_count(net), "network_backward gradient");

  // acts[l] is the input of QKAN layer l; acts.back() is the core output.
  std::vector<std::vector<double>> acts;
  acts.reserve(net.layers.size() + 1);
  acts.push_back(net.encoder ? net.encoder->apply(x) : std::vector<double>(x.begin(), x.end()));
  for (const auto& layer : net.layers) acts.push_back(layer_forward(layer, acts.back()));
  std::vector<double> out = net.decoder ? net.decoder->apply(acts.back()) : acts.back();

  std::vector<std::size_t> offsets;
  std::size_t off = net.encoder ? net.encoder->param_count() : 0;
  for (const auto& layer : net.layers) {
    offsets.push_back(off);
    off += layer.param_count();
  }

  std::vector<double> g(upstream.begin(), upstream.end());
  if (net.decoder) g = linear_backward(*net.decoder, acts.back(), g, grad.subspan(off, net.decoder->param_count()));

  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const QkanLayer& layer = net.layers[l];
    const std::vector<double>& in = acts[l];
    std::vector<double> d_in(layer.n_in, 0.0);
    std::size_t edge_off = offsets[l];
    for (std::size_t j = 0; j < layer.n_out; ++j) {
      for (std::size_t i = 0; i < layer.n_in; ++i) {
        const DaruanParams& p = layer.edge(j, i);
        d_in[i] += backward_accumulate(p, in[i], g[j], grad.subspan(edge_off, p.size()));
        edge_off += p.size();
      }
    }
    g = std::move(d_in);
  }

  if (net.encoder) g = linear_backward(*net.encoder, x, g, grad.subspan(0, net.encoder->param_count()));
  return {std::move(out), std::move(g)};
}

NetworkGradient network_backward(const QkanNetwork& net, std::span<const double> x, std::span<const double> upstream) {
  NetworkGradient result;
  result.params.assign(param_count(net), 0.0);
  result.d_input = network_backward_accumulate(net, x, upstream, result.params).d_input;
  return result;
}

std::size_t param_count(const QkanNetwork& net) {
  std::size_t n = 0;
  if (net.encoder) n += net.encoder->param_count();
  for (const auto& layer : net.layers) n += layer.param_count();
  if (net.decoder) n += net.decoder->param_count();
  return n;
}

QkanNetwork make_qkan(const std::vector<std::size_t>& shape, std::size_t r, Rng& rng, const DaruanInit& init) {
  if (shape.size() < 2) throw std::invalid_argument("make_qkan: shape needs at least two node counts");
  if (r == 0) throw std::invalid_argument("make_qkan: r must be >= 1");
  QkanNetwork net;
  net.shape = shape;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
    net.layers.push_back(QkanLayer::random(shape[l], shape[l + 1], r, rng, init));
  }
  return net;
}

std::size_t latent_dim(std::size_t d) {
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::bit_width(d)));
}

QkanNetwork make_hqkan(std::size_t in_dim, std::size_t out_dim, std::size_t r,
                       const std::vector<std::size_t>& hidden_shape, Rng& rng, const DaruanInit& init) {
  if (in_dim == 0 || out_dim == 0) throw std::invalid_argument("make_hqkan: dims must be >= 1");
  std::vector<std::size_t> core{latent_dim(in_dim)};
  core.insert(core.end(), hidden_shape.begin(), hidden_shape.end());
  core.push_back(latent_dim(out_dim));
  for (std::size_t n : core) {
    if (n == 0) throw std::invalid_argument("make_hqkan: hidden widths must be >= 1");
  }
  QkanNetwork net;
  net.encoder = LinearLayer::random(in_dim, core.front(), rng);
  QkanNetwork body = make_qkan(core, r, rng, init);
  net.shape = std::move(body.shape);
  net.layers = std::move(body.layers);
  net.decoder = LinearLayer::random(core.back(), out_dim, rng);
  return net;
}

QkanNetwork extend_network(const QkanNetwork& net, std::size_t new_r) {
  QkanNetwork out = net;
  for (auto& layer : out.layers) {
    for (auto& e : layer.edges) e = extend(e, new_r);
  }
  return out;
}

}  // namespace qkan
