#pragma once

// Counter-based pseudo random numbers.
//
// Algorithm: SplitMix64 (Steele, Lea, Flood 2014) used in counter mode. The
// i-th output of a stream with key s is mix64(s + (i + 1) * 0x9E3779B97F4A7C15)
// where mix64 is the SplitMix64 finalizer
//
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
//
// Sub-streams are keyed by derive(key, tag) = mix64(key ^ mix64(tag + GOLDEN)),
// so any (seed, trial, vertex, ...) path yields the same stream on every
// platform and in every thread schedule. Derived quantities:
//   uniform01()  = (next() >> 11) * 2^-53
//   below(n)     = Lemire multiply-shift with rejection (unbiased)
//   shuffle      = Fisher-Yates from the back, j = below(i + 1)

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace kpower {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t key, std::uint64_t tag) {
  return mix64(key ^ mix64(tag + kGolden));
}

inline std::uint64_t derive_seed(std::uint64_t key, std::initializer_list<std::uint64_t> tags) {
  for (auto t : tags) key = derive_seed(key, t);
  return key;
}

class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  template <class T>
  void shuffle(std::span<T> xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }
  template <class T>
  void shuffle(std::vector<T>& xs) {
    shuffle(std::span<T>(xs));
  }

  /// Moves a uniformly random m-subset of xs to its front (partial Fisher-Yates).
  template <class T>
  void select_prefix(std::vector<T>& xs, std::size_t m) {
    const std::size_t n = xs.size();
    for (std::size_t i = 0; i < m && i < n; ++i) {
      const auto j = i + static_cast<std::size_t>(below(n - i));
      std::swap(xs[i], xs[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace kpower
