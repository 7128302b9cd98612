#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>

namespace sea {

// Deterministic random numbers that are reproducible in any language.
//
// The engine is xoshiro256** (Blackman & Vigna) seeded by four successive
// SplitMix64 outputs. All derived draws are defined here rather than through
// <random> distributions, whose algorithms are implementation-defined:
//
//   uniform()      (next() >> 11) * 2^-53, in [0, 1)
//   bounded(n)     rejection sampling on next() with threshold 2^64 mod n
//   exponential()  -log(1 - uniform())
//   normal()       Box-Muller, cosine branch only (one draw per call)
//   shuffle        Fisher-Yates from the back, j = bounded(i + 1)

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

// Folds a sequence of keys into a seed. Used to derive independent substreams
// such as (seed, epoch, batch, example).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  double uniform() noexcept;
  std::uint64_t bounded(std::uint64_t n) noexcept;
  double exponential() noexcept;
  double normal() noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(bounded(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace sea
