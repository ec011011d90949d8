#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hcf {

// SplitMix64 finalizer. Used both as a stream generator and as a pure hash
// for counter-based sampling.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ (mix64(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

/// Maps 64 random bits to a double in (0, 1).
constexpr double to_unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Small deterministic random source. Output depends only on the seed, so
/// sequences are identical across platforms and standard libraries.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform in (0, 1).
  constexpr double uniform() noexcept { return to_unit_open(next()); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one draw per call, second discarded).
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

/// Standard normal sample that is a pure function of (key, counter).
inline double counter_normal(std::uint64_t key, std::uint64_t counter) noexcept {
  const std::uint64_t h = hash_combine(key, counter);
  const double u1 = to_unit_open(mix64(h));
  const double u2 = to_unit_open(mix64(h ^ 0xd6e8feb86659fd93ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace hcf
