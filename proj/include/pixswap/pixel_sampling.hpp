#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "pixswap/errors.hpp"
#include "pixswap/rng.hpp"
#include "pixswap/tensor.hpp"

namespace pixswap {

/// Zero-based permutation: entry i names the batch image that plays x_{a_i}.
using Permutation = std::vector<std::size_t>;

enum class BankOrder { kRaster, kShuffled };

struct SamplingConfig {
  bool swap_upper = true;
  bool swap_pants = true;
  bool independent_permutations = true;
  BankOrder bank_order = BankOrder::kRaster;

  void validate() const {
    if (!swap_upper && !swap_pants) throw ConfigError("pixel sampling needs swap_upper or swap_pants");
  }
};

/// Flat list of every `class_id` pixel in the batch, gathered image by image in
/// permutation order. Pixels are stored interleaved, `channels` values each.
struct PixelBank {
  int class_id = kUpperClothes;
  int channels = 3;
  std::vector<float> pixels;
  Permutation source;

  std::size_t size() const { return channels == 0 ? 0 : pixels.size() / channels; }
  std::span<const float> pixel(std::size_t j) const { return {pixels.data() + j * channels, static_cast<std::size_t>(channels)}; }
};

/// Uniform random permutation of 0..B-1 (Fisher-Yates). The batch is not reordered.
inline Permutation shuffle_batch(const Batch& batch, RngStream& rng) {
  Permutation perm(batch.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

inline void check_swappable_class(int class_id) {
  if (class_id != kUpperClothes && class_id != kPants) {
    throw ArgumentError("pixel banks exist only for upper clothes (2) and pants (3), got " + std::to_string(class_id));
  }
}

inline std::size_t count_class_pixels(const Batch& batch, int class_id) {
  std::size_t n = 0;
  for (const auto& mask : batch.masks) {
    for (auto label : mask.labels()) n += (label == class_id);
  }
  return n;
}

/// Gathers the class pixels of x_{a_1}, ..., x_{a_B}, each image in raster order.
/// With BankOrder::kShuffled the gathered list is then permuted with `rng`.
inline PixelBank build_bank(const Batch& batch, const Permutation& perm, int class_id, BankOrder order,
                            RngStream& rng) {
  check_swappable_class(class_id);
  batch.validate();
  if (perm.size() != batch.size()) throw ShapeError("permutation length differs from batch size");

  PixelBank bank;
  bank.class_id = class_id;
  bank.channels = batch.size() == 0 ? 3 : batch.images[0].channels();
  bank.source = perm;
  bank.pixels.reserve(count_class_pixels(batch, class_id) * bank.channels);

  for (std::size_t a : perm) {
    const Image& img = batch.images.at(a);
    const auto labels = batch.masks[a].labels();
    for (std::size_t p = 0; p < labels.size(); ++p) {
      if (labels[p] != class_id) continue;
      for (int c = 0; c < img.channels(); ++c) bank.pixels.push_back(img.plane(c)[p]);
    }
  }

  if (order == BankOrder::kShuffled) {
    const std::size_t n = bank.size();
    const auto ch = static_cast<std::size_t>(bank.channels);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = rng.uniform_index(i);
      for (std::size_t c = 0; c < ch; ++c) std::swap(bank.pixels[(i - 1) * ch + c], bank.pixels[j * ch + c]);
    }
  }
  return bank;
}

/// Substitutes bank pixels, in bank order, into the class positions of the batch
/// enumerated image by image and raster order within each image. Masks and
/// identities are carried over untouched.
inline Batch apply_bank(const Batch& batch, const PixelBank& bank) {
  batch.validate();
  const std::size_t targets = count_class_pixels(batch, bank.class_id);
  if (targets != bank.size()) {
    throw ConsistencyError("bank holds " + std::to_string(bank.size()) + " pixels of class " +
                           std::to_string(bank.class_id) + " but the batch has " + std::to_string(targets));
  }
  Batch out = batch;
  std::size_t j = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Image& img = out.images[i];
    if (img.channels() != bank.channels) throw ShapeError("bank channel count differs from batch images");
    const auto labels = out.masks[i].labels();
    for (std::size_t p = 0; p < labels.size(); ++p) {
      if (labels[p] != bank.class_id) continue;
      const auto v = bank.pixel(j++);
      for (int c = 0; c < img.channels(); ++c) img.plane(c)[p] = v[c];
    }
  }
  return out;
}

/// One generated sample per input sample: upper clothes swapped (class 2) if
/// enabled, then pants (class 3), each through shuffle -> bank -> substitute.
inline Batch generate(const Batch& batch, const SamplingConfig& cfg, RngStream& rng) {
  cfg.validate();
  batch.validate();
  Batch out = batch;
  Permutation shared;
  if (!cfg.independent_permutations) shared = shuffle_batch(batch, rng);

  const auto swap_class = [&](int class_id) {
    const Permutation perm = cfg.independent_permutations ? shuffle_batch(out, rng) : shared;
    const PixelBank bank = build_bank(out, perm, class_id, cfg.bank_order, rng);
    out = apply_bank(out, bank);
  };
  if (cfg.swap_upper) swap_class(kUpperClothes);
  if (cfg.swap_pants) swap_class(kPants);
  return out;
}

}  // namespace pixswap
