#include <gtest/gtest.h>

#include <map>

#include "oracles.hpp"
#include "pixswap/pixel_sampling.hpp"

using namespace pixswap;

namespace {

// 2x2 image whose pixels are given as RGB triples in raster order.
Image make_image(std::vector<std::array<float, 3>> px) {
  Image img(3, 2, 2);
  for (int p = 0; p < 4; ++p) set_pixel(img, p / 2, p % 2, px[p]);
  return img;
}

Batch two_image_fixture() {
  Batch b;
  b.images.push_back(make_image({{{0.1f, 0.1f, 0.1f}, {0.2f, 0.2f, 0.2f}, {0.3f, 0.3f, 0.3f}, {0.4f, 0.4f, 0.4f}}}));
  b.images.push_back(make_image({{{0.5f, 0.5f, 0.5f}, {0.6f, 0.6f, 0.6f}, {0.7f, 0.7f, 0.7f}, {0.8f, 0.8f, 0.8f}}}));
  b.masks.emplace_back(2, 2, std::vector<std::uint8_t>{2, 0, 2, 1});
  b.masks.emplace_back(2, 2, std::vector<std::uint8_t>{0, 2, 3, 2});
  b.identities = {4, 9};
  return b;
}

std::vector<float> flat(const PixelBank& bank) { return bank.pixels; }

}  // namespace

TEST(ShuffleBatch, SingleSampleIsIdentity) {
  RngStream rng(1);
  Batch b = oracle::random_batch(rng, 1, 3, 3);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(shuffle_batch(b, rng), Permutation{0});
}

TEST(ShuffleBatch, RepeatableForSeed) {
  RngStream g(2);
  Batch b = oracle::random_batch(g, 3, 2, 2);
  RngStream a(17), c(17);
  EXPECT_EQ(shuffle_batch(b, a), shuffle_batch(b, c));
}

TEST(ShuffleBatch, UniformOverPermutationsOfThree) {
  RngStream g(3);
  Batch b = oracle::random_batch(g, 3, 2, 2);
  RngStream rng(11);
  std::map<Permutation, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[shuffle_batch(b, rng)];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [perm, n] : counts) EXPECT_NEAR(n / static_cast<double>(draws), 1.0 / 6.0, 0.02);
}

TEST(BuildBank, EmptyWhenClassAbsent) {
  Batch b = two_image_fixture();
  RngStream rng(0);
  const auto bank = build_bank(b, {0, 1}, kPants, BankOrder::kRaster, rng);
  EXPECT_EQ(bank.size(), 1u);
  b.masks[1].set(1, 0, kArms);
  const auto empty = build_bank(b, {0, 1}, kPants, BankOrder::kRaster, rng);
  EXPECT_EQ(empty.size(), 0u);
  EXPECT_EQ(apply_bank(b, empty), b);
}

TEST(BuildBank, SinglePixel) {
  Batch b;
  Image img(3, 1, 2, 0.9f);
  set_pixel(img, 0, 1, std::vector<float>{0.1f, 0.2f, 0.3f});
  b.images.push_back(img);
  b.masks.emplace_back(1, 2, std::vector<std::uint8_t>{0, 2});
  b.identities = {0};
  RngStream rng(0);
  const auto bank = build_bank(b, {0}, kUpperClothes, BankOrder::kRaster, rng);
  EXPECT_EQ(flat(bank), (std::vector<float>{0.1f, 0.2f, 0.3f}));
}

TEST(BuildBank, ReversedPermutationGathersSecondImageFirst) {
  const Batch b = two_image_fixture();
  RngStream rng(0);
  const auto bank = build_bank(b, {1, 0}, kUpperClothes, BankOrder::kRaster, rng);
  ASSERT_EQ(bank.size(), 4u);
  // Q's class-2 pixels (raster positions 1, 3), then P's (positions 0, 2).
  const std::vector<float> want{0.6f, 0.6f, 0.6f, 0.8f, 0.8f, 0.8f, 0.1f, 0.1f, 0.1f, 0.3f, 0.3f, 0.3f};
  EXPECT_EQ(flat(bank), want);
}

TEST(BuildBank, ShuffledOrderIsAPermutationOfRaster) {
  RngStream g(5);
  const Batch b = oracle::random_batch(g, 4, 6, 5);
  RngStream r1(1), r2(2);
  const auto raster = build_bank(b, {2, 0, 3, 1}, kUpperClothes, BankOrder::kRaster, r1);
  const auto shuffled = build_bank(b, {2, 0, 3, 1}, kUpperClothes, BankOrder::kShuffled, r2);
  ASSERT_EQ(raster.size(), shuffled.size());
  std::vector<std::vector<float>> a, c;
  for (std::size_t j = 0; j < raster.size(); ++j) {
    a.emplace_back(raster.pixel(j).begin(), raster.pixel(j).end());
    c.emplace_back(shuffled.pixel(j).begin(), shuffled.pixel(j).end());
  }
  EXPECT_NE(a, c);
  std::sort(a.begin(), a.end());
  std::sort(c.begin(), c.end());
  EXPECT_EQ(a, c);
}

TEST(BuildBank, RejectsNonClothesClass) {
  const Batch b = two_image_fixture();
  RngStream rng(0);
  for (int cls : {0, 1, 4, 5, 6}) EXPECT_THROW(build_bank(b, {0, 1}, cls, BankOrder::kRaster, rng), ArgumentError);
}

TEST(ApplyBank, ReversedPermutationExchangesClothes) {
  const Batch b = two_image_fixture();
  RngStream rng(0);
  const Batch out = apply_bank(b, build_bank(b, {1, 0}, kUpperClothes, BankOrder::kRaster, rng));
  EXPECT_EQ(pixel_at(out.images[0], 0, 0), pixel_at(b.images[1], 0, 1));
  EXPECT_EQ(pixel_at(out.images[0], 1, 0), pixel_at(b.images[1], 1, 1));
  EXPECT_EQ(pixel_at(out.images[1], 0, 1), pixel_at(b.images[0], 0, 0));
  EXPECT_EQ(pixel_at(out.images[1], 1, 1), pixel_at(b.images[0], 1, 0));
  EXPECT_EQ(pixel_at(out.images[0], 0, 1), pixel_at(b.images[0], 0, 1));
  EXPECT_EQ(pixel_at(out.images[1], 1, 0), pixel_at(b.images[1], 1, 0));
  EXPECT_EQ(out.masks, b.masks);
  EXPECT_EQ(out.identities, b.identities);
}

TEST(ApplyBank, SelfPermutationIsNoOp) {
  RngStream g(6);
  const Batch b = oracle::random_batch(g, 1, 5, 4);
  RngStream rng(0);
  EXPECT_EQ(apply_bank(b, build_bank(b, {0}, kPants, BankOrder::kRaster, rng)), b);
}

TEST(ApplyBank, CountMismatchIsConsistencyError) {
  Batch b = two_image_fixture();
  RngStream rng(0);
  const auto bank = build_bank(b, {0, 1}, kUpperClothes, BankOrder::kRaster, rng);
  b.masks[0].set(0, 1, kUpperClothes);
  EXPECT_THROW(apply_bank(b, bank), ConsistencyError);
}

TEST(Generate, NoUpperPixelsLeavesBatchUnchanged) {
  RngStream g(7);
  Batch b = oracle::random_batch(g, 4, 4, 4);
  for (auto& m : b.masks)
    for (int r = 0; r < m.height(); ++r)
      for (int c = 0; c < m.width(); ++c)
        if (m.at(r, c) == kUpperClothes) m.set(r, c, kHead);
  SamplingConfig cfg;
  cfg.swap_pants = false;
  RngStream rng(1);
  EXPECT_EQ(generate(b, cfg, rng), b);
}

TEST(Generate, RequiresAtLeastOneSwap) {
  SamplingConfig cfg;
  cfg.swap_upper = cfg.swap_pants = false;
  RngStream g(0);
  const Batch b = oracle::random_batch(g, 2, 2, 2);
  EXPECT_THROW(generate(b, cfg, g), ConfigError);
}

TEST(Generate, ConservationLocalityAndLabels) {
  RngStream g(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t B = 1 + g.uniform_index(8);
    const Batch b = oracle::random_batch(g, B, 1 + static_cast<int>(g.uniform_index(6)), 1 + static_cast<int>(g.uniform_index(6)));
    SamplingConfig cfg;
    cfg.swap_upper = g.bernoulli(0.8);
    cfg.swap_pants = !cfg.swap_upper || g.bernoulli(0.8);
    cfg.independent_permutations = g.bernoulli(0.5);
    cfg.bank_order = g.bernoulli(0.5) ? BankOrder::kRaster : BankOrder::kShuffled;
    RngStream rng(trial);
    const Batch out = generate(b, cfg, rng);
    ASSERT_EQ(out.size(), b.size());
    EXPECT_EQ(oracle::class_multiset(out, kUpperClothes), oracle::class_multiset(b, kUpperClothes));
    EXPECT_EQ(oracle::class_multiset(out, kPants), oracle::class_multiset(b, kPants));
    std::vector<int> swapped;
    if (cfg.swap_upper) swapped.push_back(kUpperClothes);
    if (cfg.swap_pants) swapped.push_back(kPants);
    if (swapped.size() == 2) {
      EXPECT_TRUE(oracle::untouched_outside(b, out, {kUpperClothes, kPants}));
    } else {
      EXPECT_TRUE(oracle::untouched_outside(b, out, {swapped[0]}));
    }
    EXPECT_EQ(out.masks, b.masks);
    EXPECT_EQ(out.identities, b.identities);
  }
}

TEST(Generate, DeterministicForSeed) {
  RngStream g(9);
  const Batch b = oracle::random_batch(g, 6, 5, 5);
  for (auto order : {BankOrder::kRaster, BankOrder::kShuffled}) {
    SamplingConfig cfg;
    cfg.bank_order = order;
    RngStream r1(42), r2(42);
    EXPECT_EQ(generate(b, cfg, r1), generate(b, cfg, r2));
  }
}

TEST(Generate, SingleSampleFixedPointWithRasterBank) {
  RngStream g(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Batch b = oracle::random_batch(g, 1, 4, 3);
    SamplingConfig cfg;
    cfg.independent_permutations = g.bernoulli(0.5);
    RngStream rng(trial);
    EXPECT_EQ(generate(b, cfg, rng), b);
  }
}

TEST(Generate, MovesPixelsBetweenImages) {
  // With distinct clothes colours per image, some image must change for B>1 over a few seeds.
  RngStream g(12);
  const Batch b = oracle::random_batch(g, 4, 6, 6);
  bool changed = false;
  for (int s = 0; s < 5 && !changed; ++s) {
    RngStream rng(s);
    changed = !(generate(b, SamplingConfig{}, rng) == b);
  }
  EXPECT_TRUE(changed);
}
