#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hwqoc/rng.hpp"

using namespace hwqoc;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiverge) {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  EXPECT_EQ(same, 0);
}

TEST(Rng, UniformInHalfOpenUnitInterval) {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Rng, UniformRangeRespectsBounds) {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform(-3.0, 5.0);
    EXPECT_GE(u, -3.0);
    EXPECT_LT(u, 5.0);
  }
}

TEST(Rng, NormalMomentsRoughlyStandard) {
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Rng, IndexIsInRangeAndCoversAll) {
  Rng rng(13);
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t k = rng.index(5);
    ASSERT_LT(k, 5u);
    ++seen[k];
  }
  for (int c : seen) EXPECT_GT(c, 0);
}

TEST(DeriveSeed, LabelsSeparateStreams) {
  const std::uint64_t s = 1234;
  EXPECT_NE(derive_seed(s, "geometry"), derive_seed(s, "dynamics"));
  EXPECT_NE(derive_seed(s, "a"), derive_seed(s, "b"));
  EXPECT_EQ(derive_seed(s, "geometry"), derive_seed(s, "geometry"));
}

TEST(DeriveSeed, IndexSeparatesStreams) {
  const std::uint64_t s = 99;
  EXPECT_NE(derive_seed(s, "worker", 0), derive_seed(s, "worker", 1));
  EXPECT_EQ(derive_seed(s, "worker", 3), derive_seed(s, "worker", 3));
}

TEST(DeriveSeed, SeedChangesOutput) {
  EXPECT_NE(derive_seed(1, "x"), derive_seed(2, "x"));
}

TEST(Rng, LabeledConstructorMatchesDeriveSeed) {
  Rng a(5, "stream", 2);
  Rng b(derive_seed(5, "stream", 2));
  for (int i = 0; i < 16; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}
