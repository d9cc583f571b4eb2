#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace prodlm {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a. `state` allows incremental hashing of several buffers.
std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t state = kFnvOffset);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t state = kFnvOffset);

std::uint64_t splitmix64(std::uint64_t x);

/// Derives a child seed from a parent seed and a string key.
std::uint64_t hash64(std::uint64_t seed, std::string_view key);
std::uint64_t hash64(std::uint64_t seed, std::uint64_t key);

/// Seeded generator with platform-independent distributions. The std
/// distribution objects are implementation-defined, so they are avoided.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal(double mean = 0.0, double stddev = 1.0);

  template <typename Container>
  const auto& pick(const Container& items) {
    return items[below(items.size())];
  }

  template <typename Container>
  void shuffle(Container& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace prodlm
