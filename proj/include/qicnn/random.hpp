#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

namespace qicnn {

// SplitMix64 (Steele, Lea, Flood 2014). Every shuffle, subset and parameter
// initialization in the project draws from this generator so that runs are
// reproducible across platforms and implementations:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += kGamma);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Index in [0, n). Plain modulo; the bias is below 2^-40 for any n used here.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

 private:
  std::uint64_t state_;
};

// Seed of the independent stream used for epoch `epoch` of a run seeded `seed`.
inline std::uint64_t epoch_stream_seed(std::uint64_t seed, std::uint64_t epoch) {
  SplitMix64 mix(seed ^ ((epoch + 1) * SplitMix64::kGamma));
  return mix.next();
}

// Fisher-Yates shuffle of 0..n-1, walking i from n-1 down to 1 and swapping
// with j = next() % (i + 1).
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace qicnn
