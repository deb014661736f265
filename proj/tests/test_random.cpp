#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "qicnn/random.hpp"

using namespace qicnn;

// Expected values below were produced by a standalone Python transcription
// of the generator and the shuffle, then frozen.

TEST(SplitMix64, KnownSequenceSeedZero) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng.next(), 0x06c45d188009454fULL);
}

TEST(SplitMix64, KnownSequenceSeed42) {
  SplitMix64 rng(42);
  EXPECT_EQ(rng.next(), 0xbdd732262feb6e95ULL);
  EXPECT_EQ(rng.next(), 0x28efe333b266f103ULL);
  EXPECT_EQ(rng.next(), 0x47526757130f9f52ULL);
}

TEST(SplitMix64, UniformRange) {
  SplitMix64 rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = rng.uniform(-3.0, 2.0);
    ASSERT_GE(v, -3.0);
    ASSERT_LT(v, 2.0);
  }
}

TEST(SeededPermutation, FrozenOrder) {
  const std::vector<std::size_t> expected{9, 6, 7, 10, 3, 11, 4, 2, 0, 8, 5, 1};
  EXPECT_EQ(seeded_permutation(12, 42), expected);
}

TEST(SeededPermutation, IsPermutation) {
  for (std::size_t n : {0u, 1u, 2u, 17u, 1000u}) {
    auto p = seeded_permutation(n, n + 3);
    std::sort(p.begin(), p.end());
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(p[i], i);
  }
}

TEST(EpochStream, FrozenSeedsAndDistinctEpochs) {
  EXPECT_EQ(epoch_stream_seed(42, 0), 0x28efe333b266f103ULL);
  EXPECT_EQ(epoch_stream_seed(42, 1), 0x5fd30d2fcbef75e3ULL);
  EXPECT_EQ(epoch_stream_seed(42, 2), 0x6545d3b48b05c974ULL);
  std::set<std::uint64_t> seen;
  for (std::uint64_t e = 0; e < 100; ++e) seen.insert(epoch_stream_seed(7, e));
  EXPECT_EQ(seen.size(), 100u);
}

TEST(EpochStream, FrozenEpochOrders) {
  EXPECT_EQ(seeded_permutation(10, epoch_stream_seed(42, 0)),
            (std::vector<std::size_t>{5, 7, 3, 1, 8, 2, 9, 4, 0, 6}));
  EXPECT_EQ(seeded_permutation(10, epoch_stream_seed(42, 1)),
            (std::vector<std::size_t>{5, 0, 2, 4, 7, 8, 1, 9, 3, 6}));
}
