#pragma once

#include <cmath>
#include <cstdint>

namespace stablewalk {

// Counter-style generator: a 64-bit Weyl sequence pushed through the
// splitmix64 finalizer. Substreams are keyed by (seed, salt, index), so a
// batch job can hand every path its own stream and reproduce bit-identically
// for any worker count or schedule.
class RngStream {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static RngStream substream(std::uint64_t seed, std::uint64_t salt,
                             std::uint64_t index) {
    const std::uint64_t base = mix(seed + kGamma) ^ mix(salt * kGamma + 0x243F6A8885A308D3ull);
    return RngStream(mix(base + index * kGamma));
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1): never returns an exact endpoint, safe under log/tan.
  double next_open_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Standard exponential.
  double next_exp() { return -std::log(next_open_unit()); }

 private:
  explicit RngStream(std::uint64_t state) : state_(state) {}
  std::uint64_t state_;
};

// Stream salts. One per independent sampling phase so that no two operations
// sharing a master seed ever touch the same substream.
namespace salt {
inline constexpr std::uint64_t kStableSample = 1;
inline constexpr std::uint64_t kStablePath = 2;
inline constexpr std::uint64_t kStableSurvival = 3;
inline constexpr std::uint64_t kMeander = 4;
inline constexpr std::uint64_t kWalk = 5;
inline constexpr std::uint64_t kCalibrate = 6;
inline constexpr std::uint64_t kOneStep = 7;
inline constexpr std::uint64_t kBootstrap = 8;
inline constexpr std::uint64_t kHill = 9;
inline constexpr std::uint64_t kRemainder = 10;
inline constexpr std::uint64_t kCalibrateRef = 11;
inline constexpr std::uint64_t kConditioned = 12;
inline constexpr std::uint64_t kMoment = 13;
}  // namespace salt

}  // namespace stablewalk
