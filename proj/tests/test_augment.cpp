#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"
#include "pixswap/augment.hpp"

using namespace pixswap;

namespace {

Image random_image(RngStream& rng, int h, int w) {
  Image img(3, h, w);
  for (auto& v : img.data()) v = static_cast<float>(rng.uniform(0.1, 0.9));
  return img;
}

SemanticMask random_mask(RngStream& rng, int h, int w) {
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(h) * w);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_index(kNumParts));
  return SemanticMask(h, w, std::move(labels));
}

// Image whose value at (r, c) encodes the mask label there, so alignment is checkable.
std::pair<Image, SemanticMask> label_coded(RngStream& rng, int h, int w) {
  SemanticMask mask = random_mask(rng, h, w);
  Image img(3, h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < 3; ++ch) img.at(ch, r, c) = 0.1f * static_cast<float>(mask.at(r, c) + 1);
  return {img, mask};
}

}  // namespace

TEST(GeoAugment, IdentityAtTargetSize) {
  RngStream rng(1);
  const Image img = random_image(rng, 16, 8);
  const SemanticMask mask = random_mask(rng, 16, 8);
  GeoAugConfig cfg{16, 8, 2, 0.5};
  const auto [out, out_mask] = apply_geometry(img, mask, cfg, GeoParams{0, 0, false});
  EXPECT_TRUE(oracle::bit_identical(out, img));
  EXPECT_EQ(out_mask, mask);
}

TEST(GeoAugment, FlipIsInvolution) {
  RngStream rng(2);
  const Image img = random_image(rng, 7, 5);
  const SemanticMask mask = random_mask(rng, 7, 5);
  EXPECT_TRUE(oracle::bit_identical(hflip(hflip(img)), img));
  EXPECT_EQ(hflip(hflip(mask)), mask);
  GeoAugConfig cfg{7, 5, 0, 0.5};
  const auto [once, once_mask] = apply_geometry(img, mask, cfg, GeoParams{0, 0, true});
  const auto [twice, twice_mask] = apply_geometry(once, once_mask, cfg, GeoParams{0, 0, true});
  EXPECT_TRUE(oracle::bit_identical(twice, img));
  EXPECT_EQ(twice_mask, mask);
  EXPECT_EQ(pixel_at(once, 3, 0), pixel_at(img, 3, 4));
}

TEST(GeoAugment, ShiftMovesPixelsAndPadsWithBackground) {
  RngStream rng(3);
  const Image img = random_image(rng, 6, 6);
  const SemanticMask mask = random_mask(rng, 6, 6);
  const auto [out, out_mask] = shift_crop(img, mask, 2, -1);
  EXPECT_EQ(pixel_at(out, 0, 1), pixel_at(img, 2, 0));
  EXPECT_EQ(out_mask.at(0, 1), mask.at(2, 0));
  EXPECT_EQ(pixel_at(out, 5, 3), std::vector<float>(3, 0.0f));
  EXPECT_EQ(out_mask.at(5, 3), kBackground);
  EXPECT_EQ(out_mask.at(2, 0), kBackground);
}

TEST(GeoAugment, MaskLabelTravelsWithPixel) {
  RngStream rng(4);
  GeoAugConfig cfg{12, 6, 3, 0.5};
  for (int trial = 0; trial < 50; ++trial) {
    const auto [img, mask] = label_coded(rng, 12, 6);
    const auto [out, out_mask] = geo_augment(img, mask, cfg, rng);
    for (int r = 0; r < 12; ++r) {
      for (int c = 0; c < 6; ++c) {
        const float v = out.at(0, r, c);
        // pad region: zero pixel, background label
        const std::uint8_t expect = v == 0.0f ? kBackground : static_cast<std::uint8_t>(std::lround(v / 0.1f) - 1);
        ASSERT_EQ(out_mask.at(r, c), expect) << "trial " << trial << " at (" << r << ", " << c << ")";
      }
    }
  }
}

TEST(GeoAugment, NearestResizeInventsNoLabels) {
  RngStream rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    SemanticMask mask(9, 5, kBackground);
    std::set<int> present;
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 5; ++c) {
        const auto l = static_cast<std::uint8_t>(rng.bernoulli(0.5) ? kUpperClothes : kLegs);
        mask.set(r, c, l);
        present.insert(l);
      }
    const auto big = resize_nearest(mask, 31, 13);
    for (auto l : big.labels()) EXPECT_TRUE(present.contains(l));
  }
}

TEST(GeoAugment, BilinearPreservesConstantsAndRange) {
  const Image flat(3, 5, 3, 0.25f);
  const Image big = resize_bilinear(flat, 17, 9);
  for (float v : big.data()) EXPECT_FLOAT_EQ(v, 0.25f);
  RngStream rng(6);
  const Image img = random_image(rng, 8, 4);
  for (float v : resize_bilinear(img, 13, 7).data()) {
    EXPECT_GE(v, 0.1f - 1e-6f);
    EXPECT_LE(v, 0.9f + 1e-6f);
  }
}

TEST(GeoAugment, MismatchedMaskIsShapeError) {
  RngStream rng(7);
  EXPECT_THROW(apply_geometry(random_image(rng, 4, 4), random_mask(rng, 4, 3), GeoAugConfig{4, 4, 0, 0.0}, GeoParams{}),
               ShapeError);
}

TEST(RandomErasing, FailedDrawIsIdentity) {
  RngStream rng(8);
  const Image img = random_image(rng, 20, 10);
  RandomErasingConfig cfg;
  cfg.probability = 0.0;
  for (int i = 0; i < 50; ++i) EXPECT_TRUE(oracle::bit_identical(random_erase(img, cfg, rng), img));
}

TEST(RandomErasing, RectangleAreaAndAspectInRange) {
  RngStream rng(9);
  const Image img(3, 64, 32, 0.5f);
  RandomErasingConfig cfg;
  cfg.probability = 1.0;
  cfg.fill = EraseFill::kConstant;
  cfg.fill_value = 0.0f;
  int erased = 0;
  for (int i = 0; i < 300; ++i) {
    const Image out = random_erase(img, cfg, rng);
    const auto box = oracle::diff_box(img, out);
    if (!box.any) continue;
    ++erased;
    const double area = static_cast<double>(box.height()) * box.width();
    EXPECT_EQ(box.changed, static_cast<std::size_t>(area));
    EXPECT_GE(area / (64.0 * 32.0), 0.02);
    EXPECT_LE(area / (64.0 * 32.0), 0.4);
    const double aspect = static_cast<double>(box.height()) / box.width();
    EXPECT_GE(aspect, 0.3);
    EXPECT_LE(aspect, 3.33);
  }
  EXPECT_GE(erased, 290);
}

TEST(RandomErasing, RandomFillStaysInsideRectangle) {
  RngStream rng(10);
  const Image img = random_image(rng, 30, 15);
  RandomErasingConfig cfg;
  cfg.probability = 1.0;
  for (int i = 0; i < 100; ++i) {
    const Image out = random_erase(img, cfg, rng);
    const auto box = oracle::diff_box(img, out);
    for (int r = 0; r < 30; ++r)
      for (int c = 0; c < 15; ++c) {
        const bool inside = box.any && r >= box.top && r <= box.bottom && c >= box.left && c <= box.right;
        if (!inside) ASSERT_EQ(pixel_at(out, r, c), pixel_at(img, r, c));
      }
  }
}

TEST(RandomErasing, InvalidConfig) {
  RngStream rng(0);
  const Image img(3, 4, 4);
  RandomErasingConfig cfg;
  cfg.area_min = 0.5;
  cfg.area_max = 0.4;
  EXPECT_THROW(random_erase(img, cfg, rng), ConfigError);
  cfg = RandomErasingConfig{};
  cfg.area_max = 1.0;
  EXPECT_THROW(random_erase(img, cfg, rng), ConfigError);
}

namespace {

std::map<std::size_t, int> group_counts(const std::vector<std::size_t>& batch,
                                        const std::vector<std::vector<std::size_t>>& groups) {
  std::map<std::size_t, int> out;
  for (auto idx : batch)
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (std::find(groups[g].begin(), groups[g].end(), idx) != groups[g].end()) ++out[g];
  return out;
}

}  // namespace

TEST(PKSampling, TwoByTwoTakesBothIdentities) {
  const std::vector<std::vector<std::size_t>> groups{{0, 1, 2}, {3, 4}};
  PKBatchStream stream(groups, PKSpec{2, 2});
  RngStream rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto batch = stream.next(rng);
    ASSERT_EQ(batch.size(), 4u);
    const auto counts = group_counts(batch, groups);
    EXPECT_EQ(counts.at(0), 2);
    EXPECT_EQ(counts.at(1), 2);
  }
}

TEST(PKSampling, SmallIdentitySampledWithReplacement) {
  const std::vector<std::vector<std::size_t>> groups{{0, 1, 2}, {7}};
  PKBatchStream stream(groups, PKSpec{2, 2});
  RngStream rng(12);
  const auto batch = stream.next(rng);
  EXPECT_EQ(std::count(batch.begin(), batch.end(), 7u), 2);
}

TEST(PKSampling, TooFewIdentitiesIsConfigError) {
  EXPECT_THROW(PKBatchStream({{0, 1}, {2, 3}}, PKSpec{3, 2}), ConfigError);
}

TEST(PKSampling, EveryBatchHasPDistinctIdentitiesKEach) {
  RngStream rng(13);
  std::vector<std::vector<std::size_t>> groups;
  std::size_t next = 0;
  for (int g = 0; g < 9; ++g) {
    std::vector<std::size_t> members(1 + rng.uniform_index(6));
    for (auto& m : members) m = next++;
    groups.push_back(members);
  }
  PKBatchStream stream(groups, PKSpec{4, 3});
  for (int i = 0; i < 200; ++i) {
    const auto batch = stream.next(rng);
    ASSERT_EQ(batch.size(), 12u);
    const auto counts = group_counts(batch, groups);
    EXPECT_EQ(counts.size(), 4u);
    for (const auto& [g, n] : counts) EXPECT_EQ(n, 3);
    // identities with enough images never repeat an index
    for (const auto& [g, n] : counts) {
      if (groups[g].size() < 3) continue;
      std::set<std::size_t> seen;
      for (auto idx : batch)
        if (std::find(groups[g].begin(), groups[g].end(), idx) != groups[g].end()) EXPECT_TRUE(seen.insert(idx).second);
    }
  }
}
