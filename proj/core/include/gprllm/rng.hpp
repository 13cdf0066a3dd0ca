#pragma once

#include <cstdint>
#include <string_view>

namespace gprllm {

/// Counter-based generator: the i-th draw is a pure function of (seed, i), so
/// a sample is reproducible from its configuration alone and identical across
/// platforms. Draw values are SplitMix64 outputs of seed + i * golden-gamma.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  std::uint64_t next() noexcept { return at(counter_++); }

  std::uint64_t at(std::uint64_t index) const noexcept {
    std::uint64_t z = seed_ + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Unbiased integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

/// FNV-1a 64-bit hash.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Per-query seed so workers get the same stream regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view key) noexcept {
  return CounterRng(global_seed ^ fnv1a64(key)).at(0);
}

}  // namespace gprllm
