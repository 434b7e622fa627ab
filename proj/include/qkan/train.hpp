#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qkan/data.hpp"
#include "qkan/network.hpp"

namespace qkan {

double mse_loss(std::span<const double> pred, std::span<const double> target);
double rmse(std::span<const double> pred, std::span<const double> target);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// Bias-corrected Adam update in place. Moments are sized on first use.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct LbfgsOptions {
  std::size_t history = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_line_search = 25;
  double curvature_eps = 1e-12;
  double grad_tol = 1e-12;  // stop once |g| falls below this
};

/// f(x) with gradient written into grad.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsStep {
  std::size_t iteration = 0;
  double loss = 0.0;
  double step_size = 0.0;
  bool line_search_failed = false;
  bool curvature_rejected = false;
};

struct LbfgsState {
  std::vector<std::vector<double>> s_hist;
  std::vector<std::vector<double>> y_hist;
  double next_initial_step = 0.0;  // 0 -> 1 / |g| capped at 1
  std::size_t iteration = 0;
};

/// One quasi-Newton iteration: two-loop direction, strong-Wolfe line
/// search, history update. x, f and g are updated in place. A failed line
/// search keeps the best Armijo point found (or leaves x unchanged), clears
/// the history and halves the next initial step.
LbfgsStep lbfgs_iterate(const Objective& f, std::vector<double>& x, double& fx, std::vector<double>& gx,
                        LbfgsState& state, const LbfgsOptions& opts = {});

/// Runs up to max_iter iterations from x (in place); returns the loss after each.
std::vector<LbfgsStep> lbfgs_minimize(const Objective& f, std::vector<double>& x, std::size_t max_iter,
                                      const LbfgsOptions& opts = {});

enum class LossKind { kMse, kCrossEntropy };
enum class OptimizerKind { kLbfgs, kAdam };

/// Mean loss over the given rows; when grad is non-empty it receives the
/// gradient in QkanNetwork::pack() layout. Rows are reduced in fixed chunks,
/// so the result does not depend on the thread count.
double dataset_loss(const QkanNetwork& net, const Dataset& data, LossKind loss, std::span<double> grad,
                    std::span<const std::size_t> rows = {}, std::size_t threads = 0);

double dataset_rmse(const QkanNetwork& net, const Dataset& data);
/// Fraction of rows whose argmax output matches the argmax target.
double dataset_accuracy(const QkanNetwork& net, const Dataset& data);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kLbfgs;
  LossKind loss = LossKind::kMse;
  std::size_t epochs = 200;
  double lr = 1e-3;             // Adam
  std::size_t batch_size = 0;   // Adam; 0 = full batch
  LbfgsOptions lbfgs;
  std::uint64_t seed = 0;       // shuffle stream
  std::size_t threads = 0;      // 0 = hardware concurrency
  bool record_elapsed = true;   // false writes elapsed_ms = 0
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_rmse = 0.0;
  double test_rmse = 0.0;
  double elapsed_ms = 0.0;
};

struct TrainResult {
  QkanNetwork best;             // lowest test RMSE seen, including the initial net
  std::size_t best_epoch = 0;
  double best_test_rmse = 0.0;
  QkanNetwork final_net;
  std::vector<EpochMetrics> trace;
  std::vector<std::string> events;
};

/// Throws NumericalError naming the epoch and parameter norm on a NaN loss.
TrainResult train(const QkanNetwork& initial, const Dataset& train_set, const Dataset& test_set,
                  const TrainConfig& config);

/// L-BFGS training with the given epoch count and history size.
TrainResult lbfgs_fit(const QkanNetwork& initial, const Dataset& train_set, const Dataset& test_set,
                      std::size_t epochs, std::size_t history = 10);

/// epoch,train_rmse,test_rmse,elapsed_ms
std::string format_metrics_csv(std::span<const EpochMetrics> trace);

}  // namespace qkan
