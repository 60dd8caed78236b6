#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "corneal/error.hpp"

namespace corneal {

/// Metric position on the interaction plane, relative to the device centre.
/// x grows to the user's right, y grows upward.
struct PlaneCoords {
  double x = 0.0;  // mm
  double y = 0.0;  // mm
};

/// Study condition: red rectangle + blue marker, or bright phone + finger.
enum class Condition { Rect, Finger };

inline std::string to_string(Condition c) { return c == Condition::Rect ? "RECT" : "FINGER"; }

inline Condition parse_condition(std::string_view s) {
  if (s == "RECT" || s == "rect") return Condition::Rect;
  if (s == "FINGER" || s == "finger") return Condition::Finger;
  throw Error(ErrorCode::ConfigInvalid, "unknown mode '" + std::string(s) + "'");
}

/// Seeded generator whose draws are defined bit-for-bit (the standard
/// distributions are implementation-specific).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) without modulo bias.
  std::size_t index(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do v = engine_();
    while (v >= limit);
    return static_cast<std::size_t>(v % n);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Box-Muller; u1 kept away from zero.
    const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derives independent stream seeds from a base seed and a stream id.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace corneal
