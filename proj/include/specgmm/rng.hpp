#pragma once

// Counter-based randomness. Every draw is a pure function of (key, counter),
// so results never depend on the order in which entries are generated.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace specgmm::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a sequence of words into one key. Order-sensitive.
constexpr std::uint64_t combine(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto w : words) h = mix64(h ^ mix64(w));
  return h;
}

/// Uniform in the open interval (0, 1) with 53 bits of resolution.
constexpr double to_unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ ^ mix64(counter));
  }

  constexpr double uniform(std::uint64_t counter) const noexcept { return to_unit_open(bits(counter)); }

  /// Standard normal via Box-Muller over the pair (2c, 2c+1).
  double normal(std::uint64_t counter) const noexcept {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

/// Sequential stream over a CounterRng; used where draws are inherently ordered
/// (shuffles, seeding), still reproducible from the key alone.
class Stream {
 public:
  constexpr explicit Stream(std::uint64_t key) noexcept : gen_(key) {}

  constexpr std::uint64_t next_bits() noexcept { return gen_.bits(counter_++); }
  constexpr double uniform() noexcept { return to_unit_open(next_bits()); }

  /// Uniform integer in [0, bound), Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
      const unsigned __int128 m = static_cast<unsigned __int128>(next_bits()) * bound;
      if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
  }

 private:
  CounterRng gen_;
  std::uint64_t counter_ = 0;
};

}  // namespace specgmm::rng
