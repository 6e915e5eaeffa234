#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gsan {

/// Deterministic random stream. Draws are implemented directly on top of the
/// mt19937_64 output so the sequence does not depend on the standard library's
/// distribution internals; identical seed means identical stream on any
/// platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n). Modulo bias is negligible for the desk-scale
  /// ranges used here and keeps the draw a single engine call.
  std::uint64_t index(std::uint64_t n) { return engine_() % n; }

  /// Derives an independent child seed; advances this stream by one draw.
  std::uint64_t fork_seed() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gsan
