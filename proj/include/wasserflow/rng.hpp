#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace wasserflow {

// Splitmix64 (Vigna 2015). One mix step of the counter-based generator.
inline constexpr std::uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kSplitmixGamma);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derive a stream key from a tuple of 64-bit parts (seed, experiment index,
/// sample index, ...). Streams with distinct part tuples are independent for
/// all practical purposes; the derivation is order-sensitive.
inline std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x8BADF00D5EEDC0DEULL;
  for (std::uint64_t p : parts) {
    std::uint64_t s = h ^ (p + kSplitmixGamma + (h << 6) + (h >> 2));
    h = splitmix64(s);
  }
  return h;
}

/// Deterministic random stream. Each logical sample of an experiment owns its
/// own stream keyed by derive_key, so results do not depend on scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    // Multiply-shift; bias is ~n/2^64, irrelevant at our sizes.
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller. Consumes two uniforms per call, no cache.
  double next_gaussian() {
    double u1;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

/// Random-access word of the splitmix sequence seeded by `key`; tail_word(k, i)
/// equals the i-th sequential output. Backs the lazily extended binary
/// expansion of "infinite precision" initial conditions for dyadic maps.
inline std::uint64_t tail_word(std::uint64_t key, std::uint64_t index) {
  std::uint64_t s = key + index * kSplitmixGamma;
  return splitmix64(s);
}

/// The point in [0,1) whose binary expansion is bits pos, pos+1, ... of the
/// bit reservoir keyed by `key` (64 bits of it, rounded down).
inline double tail_window(std::uint64_t key, std::uint64_t pos) {
  const std::uint64_t wi = pos >> 6;
  const unsigned off = static_cast<unsigned>(pos & 63);
  std::uint64_t w = tail_word(key, wi);
  if (off != 0) {
    w = (w << off) | (tail_word(key, wi + 1) >> (64 - off));
  }
  double y = static_cast<double>(w) * 0x1.0p-64;
  if (y >= 1.0) y = 0x1.fffffffffffffp-1;  // guard the rounding-to-1 corner
  return y;
}

}  // namespace wasserflow
