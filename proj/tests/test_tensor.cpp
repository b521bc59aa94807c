#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pixswap/rng.hpp"
#include "pixswap/tensor.hpp"

using namespace pixswap;

TEST(PixelAt, SinglePixel) {
  Image img(1, 1, 1, 0.5f);
  EXPECT_EQ(pixel_at(img, 0, 0), std::vector<float>{0.5f});
}

TEST(PixelAt, ZeroImage) {
  Image img(3, 2, 2, 0.0f);
  EXPECT_EQ(pixel_at(img, 1, 1), (std::vector<float>{0.0f, 0.0f, 0.0f}));
}

TEST(PixelAt, ChannelConstants) {
  Image img(3, 2, 2);
  for (int c = 0; c < 3; ++c) {
    for (auto& v : img.plane(c)) v = static_cast<float>(c) / 10.0f;
  }
  EXPECT_EQ(pixel_at(img, 0, 1), (std::vector<float>{0.0f, 0.1f, 0.2f}));
}

TEST(PixelAt, OutOfRangeThrows) {
  Image img(3, 2, 2);
  EXPECT_THROW(pixel_at(img, 2, 0), BoundsError);
  EXPECT_THROW(pixel_at(img, 0, 2), BoundsError);
}

TEST(PixelAt, RoundTripsWithWrite) {
  RngStream rng(11);
  Image img(3, 5, 4);
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      const std::vector<float> v{static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                                 static_cast<float>(rng.uniform())};
      set_pixel(img, r, c, v);
      EXPECT_EQ(pixel_at(img, r, c), v);
    }
  }
}

TEST(ImageShape, DataLengthMustMatch) {
  EXPECT_THROW(Image(3, 2, 2, std::vector<float>(11)), ShapeError);
  EXPECT_NO_THROW(Image(3, 2, 2, std::vector<float>(12)));
}

TEST(RasterPositions, AllBackground) {
  SemanticMask m(3, 3);
  EXPECT_TRUE(raster_positions(m, kUpperClothes).empty());
}

TEST(RasterPositions, Diagonal) {
  SemanticMask m(2, 2, std::vector<std::uint8_t>{2, 0, 0, 2});
  EXPECT_EQ(raster_positions(m, 2), (std::vector<Position>{{0, 0}, {1, 1}}));
}

TEST(RasterPositions, FullCoverage) {
  SemanticMask m(2, 2, std::uint8_t{3});
  EXPECT_EQ(raster_positions(m, 3), (std::vector<Position>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
}

TEST(RasterPositions, InvalidClassThrows) {
  SemanticMask m(2, 2);
  EXPECT_THROW(raster_positions(m, 6), ArgumentError);
  EXPECT_THROW(raster_positions(m, -1), ArgumentError);
}

TEST(RasterPositions, IncreasingAndTiling) {
  RngStream rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = 1 + static_cast<int>(rng.uniform_index(9));
    const int w = 1 + static_cast<int>(rng.uniform_index(9));
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(h) * w);
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_index(kNumParts));
    SemanticMask m(h, w, labels);
    std::size_t total = 0;
    for (int cls = 0; cls < kNumParts; ++cls) {
      const auto pos = raster_positions(m, cls);
      total += pos.size();
      for (std::size_t k = 1; k < pos.size(); ++k) {
        EXPECT_LT(pos[k - 1].row * w + pos[k - 1].col, pos[k].row * w + pos[k].col);
      }
    }
    EXPECT_EQ(total, static_cast<std::size_t>(h) * w);
  }
}

TEST(SemanticMaskLabels, RejectsOutOfLegend) {
  EXPECT_THROW(SemanticMask(1, 2, std::vector<std::uint8_t>{0, 6}), DataError);
  SemanticMask m(1, 1);
  EXPECT_THROW(m.set(0, 0, 7), ArgumentError);
}

TEST(BatchShape, ValidatesLengthsAndShapes) {
  Batch b;
  b.images = {Image(3, 2, 2), Image(3, 2, 2)};
  b.masks = {SemanticMask(2, 2)};
  b.identities = {0, 1};
  EXPECT_THROW(b.validate(), ShapeError);
  b.masks.push_back(SemanticMask(2, 3));
  EXPECT_THROW(b.validate(), ShapeError);
  b.masks[1] = SemanticMask(2, 2);
  EXPECT_NO_THROW(b.validate());
  b.images[1] = Image(3, 3, 2);
  EXPECT_THROW(b.validate(), ShapeError);
}

TEST(Rng, EqualSeedsEqualSequences) {
  RngStream a(1234), b(1234);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(a.position(), 10000u);
}

TEST(Rng, DifferentSeedsDiffer) {
  RngStream a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Rng, SplitIsDeterministicPerTag) {
  RngStream a(9);
  RngStream sa = a.split(3);
  RngStream sb = RngStream(9).split(3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(sa.next_u64(), sb.next_u64());
  RngStream s4 = RngStream(9).split(4);
  RngStream s3 = RngStream(9).split(3);
  EXPECT_NE(s3.next_u64(), s4.next_u64());
}

TEST(Rng, RangesAndMoments) {
  RngStream rng(77);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = rng.uniform_int(-2, 2);
    ASSERT_GE(k, -2);
    ASSERT_LE(k, 2);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.05);
  EXPECT_NEAR(sq / n, 1.0, 0.05);
}
