#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pdespot {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

// Maps the top 53 bits onto [0, 1).
constexpr double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// The random numbers a scenario supplies at one depth.
///
/// Every draw is a counter-based hash of (stream seed, depth, index), so
/// any depth can be replayed without walking through earlier depths, and
/// the same draw is produced on every thread and every backend.
class RandomDraws {
 public:
  constexpr RandomDraws(std::uint64_t stream_seed, int depth) noexcept
      : key_(hash_combine(stream_seed, static_cast<std::uint64_t>(depth))) {}

  constexpr std::uint64_t bits(std::uint32_t index) const noexcept {
    return hash_combine(key_, index);
  }

  constexpr double uniform(std::uint32_t index) const noexcept {
    return unit_interval(bits(index));
  }

  // Box-Muller over two sub-draws of the same index.
  double normal(std::uint32_t index) const noexcept {
    const std::uint64_t sub = bits(index);
    const double u1 = unit_interval(mix64(sub ^ 0x1ULL));
    const double u2 = unit_interval(mix64(sub ^ 0x2ULL));
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

/// Small sequential generator for harness-side sampling (world noise,
/// particle filter). Satisfies UniformRandomBitGenerator.
class SplitMix {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  constexpr double uniform() noexcept { return unit_interval((*this)()); }

 private:
  std::uint64_t state_;
};

}  // namespace pdespot
