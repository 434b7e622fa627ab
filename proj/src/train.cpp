#include "qkan/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>

#include "qkan/error.hpp"
#include "qkan/rng.hpp"

namespace qkan {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Loss of one row and its derivative with respect to the prediction.
double row_loss(std::span<const double> pred, std::span<const double> target, LossKind kind, double scale,
                std::vector<double>& upstream) {
  upstream.assign(pred.size(), 0.0);
  if (kind == LossKind::kMse) {
    double s = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
      const double d = pred[k] - target[k];
      s += d * d;
      upstream[k] = 2.0 * d * scale;
    }
    return s;
  }
  const double mx = *std::max_element(pred.begin(), pred.end());
  double z = 0.0;
  for (double p : pred) z += std::exp(p - mx);
  const std::size_t label = argmax(target);
  for (std::size_t k = 0; k < pred.size(); ++k) {
    upstream[k] = (std::exp(pred[k] - mx) / z - (k == label ? 1.0 : 0.0)) * scale;
  }
  return -(pred[label] - mx - std::log(z));
}

struct Trial {
  double alpha = 0.0;
  double f = 0.0;
  double dphi = 0.0;
  std::vector<double> x;
  std::vector<double> g;
};

// Safeguarded cubic minimizer of the interpolant through (a, fa, da), (b, fb, db).
double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double margin = 0.1 * (hi - lo);
  double t = 0.5 * (a + b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom != 0.0) t = b - (b - a) * (db + d2 - d1) / denom;
  }
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) t = 0.5 * (a + b);
  return t;
}

}  // namespace

double mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw DimensionMismatch("mse_loss: shape mismatch");
  if (pred.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) s += (pred[k] - target[k]) * (pred[k] - target[k]);
  return s / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> target) {
  return std::sqrt(mse_loss(pred, target));
}

void adam_step(AdamState& st, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw DimensionMismatch("adam_step: params and grads differ in length");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  if (st.m.size() != params.size()) throw DimensionMismatch("adam_step: moment vectors sized for another model");
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(st.beta1, t);
  const double c2 = 1.0 - std::pow(st.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    st.m[k] = st.beta1 * st.m[k] + (1.0 - st.beta1) * grads[k];
    st.v[k] = st.beta2 * st.v[k] + (1.0 - st.beta2) * grads[k] * grads[k];
    const double m_hat = st.m[k] / c1;
    const double v_hat = st.v[k] / c2;
    params[k] -= st.lr * m_hat / (std::sqrt(v_hat) + st.eps);
  }
}

LbfgsStep lbfgs_iterate(const Objective& f, std::vector<double>& x, double& fx, std::vector<double>& gx,
                        LbfgsState& state, const LbfgsOptions& opts) {
  const std::size_t n = x.size();
  LbfgsStep info;
  info.iteration = ++state.iteration;

  // Two-loop recursion for d = -H g.
  std::vector<double> d(gx);
  const std::size_t h = state.s_hist.size();
  std::vector<double> alpha(h);
  for (std::size_t k = h; k-- > 0;) {
    const double rho = 1.0 / dot(state.y_hist[k], state.s_hist[k]);
    alpha[k] = rho * dot(state.s_hist[k], d);
    for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * state.y_hist[k][i];
  }
  if (h > 0) {
    const double gamma = dot(state.s_hist.back(), state.y_hist.back()) / dot(state.y_hist.back(), state.y_hist.back());
    for (double& v : d) v *= gamma;
  }
  for (std::size_t k = 0; k < h; ++k) {
    const double rho = 1.0 / dot(state.y_hist[k], state.s_hist[k]);
    const double beta = rho * dot(state.y_hist[k], d);
    for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * state.s_hist[k][i];
  }
  for (double& v : d) v = -v;

  double dphi0 = dot(gx, d);
  if (!(dphi0 < 0.0)) {
    state.s_hist.clear();
    state.y_hist.clear();
    for (std::size_t i = 0; i < n; ++i) d[i] = -gx[i];
    dphi0 = dot(gx, d);
  }

  double alpha0 = state.next_initial_step;
  if (alpha0 <= 0.0) alpha0 = state.s_hist.empty() ? std::min(1.0, 1.0 / norm2(gx)) : 1.0;
  state.next_initial_step = 0.0;

  std::size_t evals = 0;
  auto eval = [&](double a) {
    Trial t;
    t.alpha = a;
    t.x.resize(n);
    t.g.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) t.x[i] = x[i] + a * d[i];
    t.f = f(t.x, t.g);
    t.dphi = dot(t.g, d);
    ++evals;
    return t;
  };
  auto armijo = [&](const Trial& t) { return t.f <= fx + opts.c1 * t.alpha * dphi0; };
  auto curvature = [&](const Trial& t) { return std::abs(t.dphi) <= -opts.c2 * dphi0; };

  Trial best;
  best.f = fx;
  bool have_best = false;
  auto note = [&](const Trial& t) {
    if (std::isfinite(t.f) && armijo(t) && t.f < best.f) {
      best = t;
      have_best = true;
    }
  };

  std::optional<Trial> accepted;
  Trial prev;
  prev.alpha = 0.0;
  prev.f = fx;
  prev.dphi = dphi0;
  double a = alpha0;
  bool first = true;

  auto zoom = [&](Trial lo, Trial hi) -> std::optional<Trial> {
    while (evals < opts.max_line_search) {
      const double aj = cubic_step(lo.alpha, lo.f, lo.dphi, hi.alpha, hi.f, hi.dphi);
      Trial t = eval(aj);
      note(t);
      if (!std::isfinite(t.f) || !armijo(t) || t.f >= lo.f) {
        hi = std::move(t);
      } else {
        if (curvature(t)) return t;
        if (t.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(t);
      }
      if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
    }
    return std::nullopt;
  };

  while (evals < opts.max_line_search) {
    Trial t = eval(a);
    note(t);
    if (!std::isfinite(t.f) || !armijo(t) || (!first && t.f >= prev.f)) {
      accepted = zoom(prev, t);
      break;
    }
    if (curvature(t)) {
      accepted = std::move(t);
      break;
    }
    if (t.dphi >= 0.0) {
      accepted = zoom(t, prev);
      break;
    }
    prev = std::move(t);
    a *= 2.0;
    first = false;
  }

  if (!accepted) {
    info.line_search_failed = true;
    state.s_hist.clear();
    state.y_hist.clear();
    state.next_initial_step = alpha0 / 2.0;
    if (have_best) {
      x = std::move(best.x);
      gx = std::move(best.g);
      fx = best.f;
      info.step_size = best.alpha;
    }
    info.loss = fx;
    return info;
  }

  std::vector<double> s(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = accepted->x[i] - x[i];
    y[i] = accepted->g[i] - gx[i];
  }
  if (dot(s, y) > opts.curvature_eps) {
    state.s_hist.push_back(std::move(s));
    state.y_hist.push_back(std::move(y));
    if (state.s_hist.size() > opts.history) {
      state.s_hist.erase(state.s_hist.begin());
      state.y_hist.erase(state.y_hist.begin());
    }
  } else {
    info.curvature_rejected = true;
  }
  x = std::move(accepted->x);
  gx = std::move(accepted->g);
  fx = accepted->f;
  info.step_size = accepted->alpha;
  info.loss = fx;
  return info;
}

std::vector<LbfgsStep> lbfgs_minimize(const Objective& f, std::vector<double>& x, std::size_t max_iter,
                                      const LbfgsOptions& opts) {
  std::vector<double> g(x.size(), 0.0);
  double fx = f(x, g);
  LbfgsState state;
  std::vector<LbfgsStep> trace;
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (norm2(g) < opts.grad_tol) break;
    trace.push_back(lbfgs_iterate(f, x, fx, g, state, opts));
  }
  return trace;
}

double dataset_loss(const QkanNetwork& net, const Dataset& data, LossKind loss, std::span<double> grad,
                    std::span<const std::size_t> rows, std::size_t threads) {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  if (rows.empty()) return 0.0;
  const bool want_grad = !grad.empty();
  const std::size_t n_params = want_grad ? grad.size() : 0;
  const std::size_t n_out = net.output_dim();
  const double scale = loss == LossKind::kMse ? 1.0 / static_cast<double>(rows.size() * n_out)
                                              : 1.0 / static_cast<double>(rows.size());

  // Fixed chunking keeps the floating-point reduction order independent of
  // how many threads run.
  constexpr std::size_t kChunk = 64;
  const std::size_t n_chunks = (rows.size() + kChunk - 1) / kChunk;
  std::vector<double> chunk_loss(n_chunks, 0.0);
  std::vector<std::vector<double>> chunk_grad(want_grad ? n_chunks : 0);

  auto work = [&](std::size_t c) {
    std::vector<double> upstream;
    std::vector<double>* g = nullptr;
    if (want_grad) {
      chunk_grad[c].assign(n_params, 0.0);
      g = &chunk_grad[c];
    }
    double acc = 0.0;
    const std::size_t end = std::min(rows.size(), (c + 1) * kChunk);
    for (std::size_t k = c * kChunk; k < end; ++k) {
      const auto& x = data.inputs[rows[k]];
      const auto& t = data.targets[rows[k]];
      const auto pred = network_forward(net, x);
      acc += row_loss(pred, t, loss, scale, upstream);
      if (g) network_backward_accumulate(net, x, upstream, *g);
    }
    chunk_loss[c] = acc;
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n_chunks);
  if (threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) work(c);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < n_chunks; c += threads) work(c);
      });
    }
  }

  double total = 0.0;
  for (double l : chunk_loss) total += l;
  if (want_grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& cg : chunk_grad) {
      for (std::size_t k = 0; k < n_params; ++k) grad[k] += cg[k];
    }
  }
  return total * scale;
}

double dataset_rmse(const QkanNetwork& net, const Dataset& data) {
  return std::sqrt(dataset_loss(net, data, LossKind::kMse, {}));
}

double dataset_accuracy(const QkanNetwork& net, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (argmax(network_forward(net, data.inputs[k])) == argmax(data.targets[k])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainResult train(const QkanNetwork& initial, const Dataset& train_set, const Dataset& test_set,
                  const TrainConfig& config) {
  initial.validate();
  if (train_set.size() == 0) throw DataError("train: empty training set");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  TrainResult res;
  res.best = initial;
  res.final_net = initial;
  res.best_test_rmse = test_set.size() ? dataset_rmse(initial, test_set) : dataset_rmse(initial, train_set);

  QkanNetwork work = initial;
  std::vector<double> params = initial.pack();

  auto guard = [&](double loss, std::size_t epoch) {
    if (!std::isfinite(loss)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "epoch %zu: loss is not finite (parameter norm %.6g)", epoch, norm2(params));
      throw NumericalError(buf);
    }
  };

  auto record = [&](std::size_t epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.train_rmse = dataset_rmse(work, train_set);
    m.test_rmse = test_set.size() ? dataset_rmse(work, test_set) : m.train_rmse;
    m.elapsed_ms = config.record_elapsed
                       ? std::chrono::duration<double, std::milli>(Clock::now() - start).count()
                       : 0.0;
    guard(m.train_rmse, epoch);
    res.trace.push_back(m);
    if (m.test_rmse < res.best_test_rmse) {
      res.best_test_rmse = m.test_rmse;
      res.best = work;
      res.best_epoch = epoch;
    }
  };

  if (config.optimizer == OptimizerKind::kLbfgs) {
    Objective objective = [&](std::span<const double> p, std::span<double> g) {
      work.unpack(p);
      return dataset_loss(work, train_set, config.loss, g, {}, config.threads);
    };
    std::vector<double> g(params.size(), 0.0);
    double fx = objective(params, g);
    guard(fx, 0);
    LbfgsState state;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      if (norm2(g) < config.lbfgs.grad_tol) {
        res.events.push_back("epoch " + std::to_string(epoch) + ": gradient below tolerance, stopping");
        break;
      }
      const LbfgsStep step = lbfgs_iterate(objective, params, fx, g, state, config.lbfgs);
      guard(fx, epoch);
      if (step.line_search_failed) {
        res.events.push_back("epoch " + std::to_string(epoch) + ": line search failed, halving initial step");
      }
      if (step.curvature_rejected) {
        res.events.push_back("epoch " + std::to_string(epoch) + ": curvature pair rejected");
      }
      work.unpack(params);
      record(epoch);
    }
  } else {
    AdamState adam;
    adam.lr = config.lr;
    Rng shuffle = Rng::stream(config.seed, "shuffle");
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = config.batch_size ? config.batch_size : order.size();
    std::vector<double> g(params.size(), 0.0);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[shuffle.below(k)]);
      for (std::size_t b = 0; b < order.size(); b += batch) {
        const std::span<const std::size_t> rows(order.data() + b, std::min(batch, order.size() - b));
        const double loss = dataset_loss(work, train_set, config.loss, g, rows, config.threads);
        guard(loss, epoch);
        adam_step(adam, params, g);
        work.unpack(params);
      }
      record(epoch);
    }
  }
  res.final_net = work;
  return res;
}

TrainResult lbfgs_fit(const QkanNetwork& initial, const Dataset& train_set, const Dataset& test_set,
                      std::size_t epochs, std::size_t history) {
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::kLbfgs;
  cfg.epochs = epochs;
  cfg.lbfgs.history = history;
  return train(initial, train_set, test_set, cfg);
}

std::string format_metrics_csv(std::span<const EpochMetrics> trace) {
  std::string out = "epoch,train_rmse,test_rmse,elapsed_ms\n";
  char buf[128];
  for (const auto& m : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.3f\n", m.epoch, m.train_rmse, m.test_rmse, m.elapsed_ms);
    out += buf;
  }
  return out;
}

}  // namespace qkan
