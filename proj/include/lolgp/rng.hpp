#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lolgp {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Deterministic random stream. All randomness in the library flows from one
/// 64-bit seed; child streams are derived by hashing (seed, label) so that
/// independent tasks (chains, test points, restarts) draw from disjoint
/// streams and results do not depend on scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(mix(seed, 0)) {}
  RngStream(std::uint64_t seed, std::uint64_t label) : engine_(mix(seed, label)), seed_(seed) {}

  /// Derive an independent stream for sub-task `label`.
  RngStream child(std::uint64_t label) const {
    return RngStream(mix(seed_, label), label ^ 0xA5A5A5A5A5A5A5A5ULL);
  }

  /// Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1), never exactly 0 (safe for log / inverse-CDF use).
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  /// Standard normal via Marsaglia polar; one spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double var) { return mean + std::sqrt(var) * normal(); }

  /// Exponential with rate `rate`.
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  std::uint64_t raw() { return engine_(); }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t label) {
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (label + 1));
    std::uint64_t out = detail::splitmix64(s);
    out ^= detail::splitmix64(s);
    return out;
  }

  std::mt19937_64 engine_;
  std::uint64_t seed_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fixed stream labels, so the same pipeline stage always sees the same
// sub-stream regardless of which optional stages ran before it.
namespace streams {
inline constexpr std::uint64_t kGibbs = 1;
inline constexpr std::uint64_t kPilot = 2;
inline constexpr std::uint64_t kOptimizer = 3;
inline constexpr std::uint64_t kPredictBase = 1000;
inline constexpr std::uint64_t kDesign = 4;
inline constexpr std::uint64_t kTestPoints = 5;
}  // namespace streams

}  // namespace lolgp
