#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qkan {

struct DatasetMeta {
  std::string equation;
  double noise = 0.0;  // noise_frac for Feynman sets, absolute std for sinc
  std::uint64_t seed = 0;
  double range_lo = 0.0;
  double range_hi = 1.0;
};

struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  DatasetMeta meta;

  std::size_t size() const { return inputs.size(); }
  std::size_t n_features() const { return inputs.empty() ? 0 : inputs.front().size(); }
  std::size_t n_targets() const { return targets.empty() ? 0 : targets.front().size(); }
  /// Throws DataError on ragged rows, count mismatch or non-finite entries.
  void validate() const;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

struct FeynmanSpec {
  std::string id;
  std::string formula_text;
  std::size_t arity = 0;
  std::function<double(std::span<const double>)> formula;
  std::vector<std::size_t> default_shape;
};

/// The ten dimensionless benchmark formulas.
const std::vector<FeynmanSpec>& feynman_specs();
/// Throws DataError for unknown ids.
const FeynmanSpec& find_feynman(const std::string& id);

struct InputRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// Uniform inputs on range^d; targets f(x) + N(0, noise_frac * mean|f|) with
/// mean|f| taken over the training inputs. Both splits carry noise.
DatasetSplit gen_regression(const FeynmanSpec& spec, std::size_t n_train, std::size_t n_test, double noise_frac,
                            std::uint64_t seed, InputRange range = {});

/// sin(20x) / (20x), 1 at x = 0.
double sinc_target(double x);

/// x ~ U[0, 1], y = sinc_target(x) + N(0, noise_std).
DatasetSplit gen_sinc(std::size_t n_train, std::size_t n_test, double noise_std, std::uint64_t seed);

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxArray {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  /// Images: (byte / 255 - 0.5) / 0.5. Labels: the raw byte value.
  std::vector<double> values;

  std::size_t count() const { return dims.empty() ? 0 : dims.front(); }
  std::size_t item_size() const;
};

/// Parses an unsigned-byte IDX file (magic 0x00000803 or 0x00000801).
/// Throws DataError naming the byte offset on malformed input.
IdxArray parse_idx(std::span<const std::uint8_t> bytes);
IdxArray read_idx(const std::filesystem::path& path);

/// Header x1..xn,y1..ym; values printed with 17 significant digits.
std::string format_csv(const Dataset& d);
Dataset parse_csv(const std::string& text);
void write_csv(const Dataset& d, const std::filesystem::path& path);
Dataset read_csv(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace qkan
