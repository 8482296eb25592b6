#pragma once

#include <cstdint>
#include <random>

namespace excursion {

/// Seedable random stream. A (seed, stream id) pair always reproduces the
/// same sequence; child streams are derived by hashing, so replicate k of an
/// experiment draws from `RngStream(seed, k)` regardless of scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent child stream; does not advance this stream.
  RngStream split(std::uint64_t child) const;

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential();
  /// Gamma(shape, 1); shape > 0, real.
  double gamma(double shape);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// splitmix64 finalizer, exposed for deterministic key derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace excursion
