#include <gtest/gtest.h>

#include <cmath>

#include "roughvol/rng.hpp"

using roughvol::NormalStream;
using roughvol::Philox4x32;

// Known-answer vectors of Philox4x32-10 (Salmon et al., Random123).
TEST(Philox, KnownAnswers) {
  {
    const Philox4x32 g(0);
    const auto r = g({0, 0, 0, 0});
    EXPECT_EQ(r[0], 0x6627e8d5u);
    EXPECT_EQ(r[1], 0xe169c58du);
    EXPECT_EQ(r[2], 0xbc57ac4cu);
    EXPECT_EQ(r[3], 0x9b00dbd8u);
  }
  {
    const Philox4x32 g(0xffffffffffffffffULL);
    const auto r = g({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
    EXPECT_EQ(r[0], 0x408f276du);
    EXPECT_EQ(r[1], 0x41c83b0eu);
    EXPECT_EQ(r[2], 0xa20bc7c6u);
    EXPECT_EQ(r[3], 0x6d5451fdu);
  }
  {
    const Philox4x32 g(0x299f31d0a4093822ULL);
    const auto r = g({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
    EXPECT_EQ(r[0], 0xd16cfe09u);
    EXPECT_EQ(r[1], 0x94fdccebu);
    EXPECT_EQ(r[2], 0x5001e420u);
    EXPECT_EQ(r[3], 0x24126ea1u);
  }
}

TEST(NormalStream, AddressableAndReproducible) {
  const NormalStream a(42, 7, 0), b(42, 7, 0), other_path(42, 8, 0), other_stream(42, 7, 1);
  for (std::int64_t i : {-5, 0, 1, 2, 1000, 3})
    EXPECT_EQ(a.at(i), b.at(i));
  EXPECT_NE(a.at(0), other_path.at(0));
  EXPECT_NE(a.at(0), other_stream.at(0));
  // random access equals sequential access
  const double x = a.at(17);
  for (int i = 0; i < 17; ++i) a.at(i);
  EXPECT_EQ(a.at(17), x);
}

TEST(NormalStream, MomentsOfStandardNormal) {
  const NormalStream s(2024, 0, 3);
  const int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.at(i);
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}
