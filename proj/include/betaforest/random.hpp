#ifndef BETAFOREST_RANDOM_HPP
#define BETAFOREST_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace betaforest {

/// Mixes a base seed with a list of stream tags into an independent seed
/// (splitmix64 finalizer applied per tag). Used for per-tree, per-replication
/// and per-role random streams, so results never depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

/// Seeded random stream. All variates are produced from the raw 64-bit
/// engine output by code in this library, so a given seed yields the same
/// sequence on every standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on the open interval (0,1).
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal variate (Box-Muller, no cached second value).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace betaforest

#endif  // BETAFOREST_RANDOM_HPP
