#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qkan {

/// Seeded generator with platform-independent output.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// Conversions to doubles are done here (53-bit mantissa fill, Box-Muller)
/// because the std distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for a named purpose ("init", "data", "shuffle", ...).
  static Rng stream(std::uint64_t master_seed, std::string_view purpose);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal(double mean, double stddev);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace qkan
