#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <set>

#include "eeqt/rng.hpp"

namespace eeqt {
namespace {

TEST(SplitMix64, KnownSequenceFromZero) {
  SplitMix64 sm(0);
  EXPECT_EQ(sm(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(sm(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(sm(), 0x06c45d188009454fULL);
}

TEST(Xoshiro, SameSeedSameSequence) {
  Xoshiro256StarStar a(42);
  Xoshiro256StarStar b(42);
  for (int k = 0; k < 1000; ++k) ASSERT_EQ(a(), b());
}

TEST(Xoshiro, UniformInUnitInterval) {
  Xoshiro256StarStar rng(7);
  double sum = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // Mean of U(0,1) has standard deviation 1/sqrt(12 n).
  EXPECT_NEAR(sum / n, 0.5, 5.0 / std::sqrt(12.0 * n));
}

TEST(Streams, DistinctPerTrajectoryAndSeed) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t master = 0; master < 4; ++master)
    for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(stream_seed(master, k));
  EXPECT_EQ(seen.size(), 4000u);
}

TEST(Streams, RegeneratedIndependentlyOfOrder) {
  auto s5 = make_stream(9, 5);
  auto s3 = make_stream(9, 3);
  auto again5 = make_stream(9, 5);
  for (int k = 0; k < 100; ++k) {
    const auto x = s5();
    s3();
    ASSERT_EQ(x, again5());
  }
}

TEST(Streams, AdjacentStreamsUncorrelated) {
  const int pairs = 10000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int k = 0; k < pairs; ++k) {
    auto a = make_stream(1, 2 * k);
    auto b = make_stream(1, 2 * k + 1);
    const double x = a.uniform();
    const double y = b.uniform();
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double n = pairs;
  const double cov = sxy / n - sx / n * sy / n;
  const double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  EXPECT_LE(std::abs(corr), 0.03);
}

}  // namespace
}  // namespace eeqt
