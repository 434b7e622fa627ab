#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qkan/daruan.hpp"

namespace qkan::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kNumericalError = 4,
};

/// Every field has a JSON key of the same name; "init" is a nested object
/// and "range" is a [lo, hi] pair. Flags override config values.
struct RunConfig {
  std::string task = "regression";  // regression | spectrum | distill | extend | mnist-demo
  std::string equation = "I.12.11";  // Feynman id or "sinc"
  std::string dataset;               // directory holding train.csv / test.csv
  std::vector<std::size_t> shape;    // empty -> the equation's default shape
  std::vector<std::size_t> hidden_shape;
  std::size_t r = 3;
  std::string optimizer = "lbfgs";
  std::size_t history = 10;
  double lr = 1e-3;
  std::size_t batch_size = 0;
  std::size_t epochs = 200;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t data_seed = 0;
  double noise_frac = 0.1;  // fraction of mean|f|; absolute std for "sinc"
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  double range_lo = 0.0;
  double range_hi = 1.0;
  DaruanInit init;
  std::string output_dir;
  bool record_elapsed = true;
  std::size_t threads = 0;
  std::string checkpoint;
  std::size_t new_r = 0;
  std::size_t grid = 20;
  std::size_t degree = 3;
  std::string mnist_dir;
  std::size_t mnist_samples = 2000;
  std::size_t layer = 0;
  std::size_t edge_out = 0;
  std::size_t edge_in = 0;
  std::string weights = "geometric";  // geometric | unit, for spectrum without a checkpoint
  double tol = 1e-8;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  /// Hex FNV-1a of the result-affecting fields (output paths, thread count
  /// and timing switches excluded).
  std::string hash() const;
};

/// Output directory: config value, else $QKAN_OUT_ROOT, else "qkan_out".
std::filesystem::path output_root(const RunConfig& cfg);

/// Entry point shared by the executable and the acceptance suite.
int run(const std::vector<std::string>& args);

}  // namespace qkan::cli
