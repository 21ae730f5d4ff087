#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace nodemixup {

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the substream named `purpose` under `master`:
/// splitmix64(master XOR fnv1a64(purpose)). Purposes used by the trainer are
/// "init", "dropout", "pairs" and "lambda".
std::uint64_t substream_seed(std::uint64_t master, std::string_view purpose);

/// Seeded random stream. All randomness in the library flows through this type.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, std::string_view purpose) : engine_(substream_seed(master, purpose)) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Beta(alpha, alpha); alpha <= 0 degenerates to 1.0 (no mixing).
  double beta_symmetric(double alpha);
  /// Index drawn with probability proportional to `weights` (inverse CDF on
  /// the running sum). Requires a positive total.
  std::size_t weighted_pick(std::span<const double> weights);
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nodemixup
