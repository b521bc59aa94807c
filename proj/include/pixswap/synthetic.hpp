#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "pixswap/parsing.hpp"
#include "pixswap/png_io.hpp"
#include "pixswap/rng.hpp"

namespace pixswap {

/// Procedural pedestrian dataset. Head, arm and leg colours belong to the identity;
/// upper-clothes and pants colours belong to the outfit and change between outfits.
struct SynthConfig {
  int identities = 30;
  int outfits = 3;
  int per_outfit = 6;
  int height = 64;
  int width = 32;
  double noise_sigma = 0.02;
  int jitter = 2;

  void validate() const {
    if (identities < 1 || outfits < 1 || per_outfit < 1) {
      throw ConfigError("synthetic identities, outfits and per-outfit counts must be >= 1");
    }
    if (height < 16 || width < 8) throw ConfigError("synthetic images must be at least 16x8");
    if (noise_sigma < 0.0 || jitter < 0) throw ConfigError("noise and jitter must be non-negative");
  }
};

// Raw labels written into mask PNGs (LIP numbering, recombined at load).
namespace raw_label {
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kHair = 2;
inline constexpr std::uint8_t kUpperClothes = 5;
inline constexpr std::uint8_t kPants = 9;
inline constexpr std::uint8_t kFace = 13;
inline constexpr std::uint8_t kLeftArm = 14;
inline constexpr std::uint8_t kRightArm = 15;
inline constexpr std::uint8_t kLeftLeg = 16;
inline constexpr std::uint8_t kRightLeg = 17;
}  // namespace raw_label

namespace synth_detail {

using Rgb = std::array<float, 3>;

inline Rgb random_colour(RngStream& rng, double lo = 0.05, double hi = 0.95) {
  return {static_cast<float>(rng.uniform(lo, hi)), static_cast<float>(rng.uniform(lo, hi)),
          static_cast<float>(rng.uniform(lo, hi))};
}

struct IdentityLook {
  Rgb hair, skin, legs;
};

struct OutfitLook {
  Rgb upper, pants;
};

// Fractional rectangle [top, bottom) x [left, right) of the figure.
struct Box {
  double top, bottom, left, right;
};

struct Canvas {
  int height, width;
  std::vector<Rgb> colour;
  std::vector<std::uint8_t> label;

  void fill(const Box& box, int dy, int dx, const Rgb& c, std::uint8_t raw) {
    const int r0 = std::max(0, static_cast<int>(std::lround(box.top * height)) + dy);
    const int r1 = std::min(height, static_cast<int>(std::lround(box.bottom * height)) + dy);
    const int c0 = std::max(0, static_cast<int>(std::lround(box.left * width)) + dx);
    const int c1 = std::min(width, static_cast<int>(std::lround(box.right * width)) + dx);
    for (int r = r0; r < r1; ++r) {
      for (int col = c0; col < c1; ++col) {
        colour[static_cast<std::size_t>(r) * width + col] = c;
        label[static_cast<std::size_t>(r) * width + col] = raw;
      }
    }
  }
};

inline constexpr Box kHairBox{0.02, 0.10, 0.28, 0.72};
inline constexpr Box kFaceBox{0.10, 0.22, 0.28, 0.72};
inline constexpr Box kTorsoBox{0.22, 0.50, 0.22, 0.78};
inline constexpr Box kLeftArmBox{0.23, 0.50, 0.06, 0.22};
inline constexpr Box kRightArmBox{0.23, 0.50, 0.78, 0.94};
inline constexpr Box kPantsBox{0.50, 0.74, 0.22, 0.78};
inline constexpr Box kLeftLegBox{0.74, 0.98, 0.22, 0.48};
inline constexpr Box kRightLegBox{0.74, 0.98, 0.52, 0.78};

inline void render(const SynthConfig& cfg, const IdentityLook& who, const OutfitLook& outfit, RngStream& rng,
                   png::Raster& image, png::Raster& mask) {
  Canvas canvas{cfg.height, cfg.width, {}, {}};
  const std::size_t n = static_cast<std::size_t>(cfg.height) * cfg.width;
  canvas.colour.resize(n);
  canvas.label.assign(n, raw_label::kBackground);

  for (auto& px : canvas.colour) {
    for (auto& v : px) v = static_cast<float>(rng.uniform(0.35, 0.65));
  }

  const int dy = static_cast<int>(rng.uniform_int(-cfg.jitter, cfg.jitter));
  const int dx = static_cast<int>(rng.uniform_int(-cfg.jitter, cfg.jitter));
  canvas.fill(kLeftArmBox, dy, dx, who.skin, raw_label::kLeftArm);
  canvas.fill(kRightArmBox, dy, dx, who.skin, raw_label::kRightArm);
  canvas.fill(kTorsoBox, dy, dx, outfit.upper, raw_label::kUpperClothes);
  canvas.fill(kPantsBox, dy, dx, outfit.pants, raw_label::kPants);
  canvas.fill(kLeftLegBox, dy, dx, who.legs, raw_label::kLeftLeg);
  canvas.fill(kRightLegBox, dy, dx, who.legs, raw_label::kRightLeg);
  canvas.fill(kHairBox, dy, dx, who.hair, raw_label::kHair);
  canvas.fill(kFaceBox, dy, dx, who.skin, raw_label::kFace);

  image = png::Raster{cfg.width, cfg.height, 3, std::vector<std::uint8_t>(n * 3)};
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const float noisy = canvas.colour[i][c] + static_cast<float>(rng.normal(0.0, cfg.noise_sigma));
      image.bytes[i * 3 + c] = png::to_byte(noisy);
    }
  }
  mask = png::Raster{cfg.width, cfg.height, 1, std::move(canvas.label)};
}

inline std::string padded(int value, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d", digits, value);
  return buf;
}

}  // namespace synth_detail

/// Writes images/, masks/ and manifest.csv under `out_dir` and returns the loaded dataset.
///
/// The first half of the identities (rounded down) is the training split. For each
/// remaining identity, outfit 0 is split between gallery (first ceil(n/2) images)
/// and query_same; every other outfit goes to query_cross, so a cross-clothes query
/// never shares its clothes id with a gallery record of its identity.
inline Dataset generate_synthetic(const SynthConfig& cfg, RngStream& rng, const std::filesystem::path& out_dir) {
  using namespace synth_detail;
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (!ec) std::filesystem::create_directories(out_dir / "masks", ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  const int num_train = cfg.identities / 2;
  const int gallery_per_outfit = (cfg.per_outfit + 1) / 2;
  std::vector<SampleRecord> records;

  for (int id = 0; id < cfg.identities; ++id) {
    const std::string identity = "p" + padded(id, 3);
    const IdentityLook who{random_colour(rng), random_colour(rng), random_colour(rng)};
    const bool train = id < num_train;
    for (int o = 0; o < cfg.outfits; ++o) {
      const OutfitLook outfit{random_colour(rng), random_colour(rng)};
      const std::string clothes = identity + "_c" + std::to_string(o);
      for (int k = 0; k < cfg.per_outfit; ++k) {
        png::Raster image, mask;
        render(cfg, who, outfit, rng, image, mask);
        const std::string stem = identity + "_c" + std::to_string(o) + "_" + padded(k, 3) + ".png";
        png::write(out_dir / "images" / stem, image);
        png::write(out_dir / "masks" / stem, mask);

        Split split = Split::kTrain;
        std::string camera;
        if (train) {
          camera = o == 0 ? (k % 2 == 0 ? "A" : "B") : "C";
        } else if (o == 0) {
          split = k < gallery_per_outfit ? Split::kGallery : Split::kQuerySame;
          camera = k < gallery_per_outfit ? "A" : "B";
        } else {
          split = Split::kQueryCross;
          camera = "C";
        }
        records.push_back({"images/" + stem, "masks/" + stem, identity, camera, clothes, split});
      }
    }
  }
  write_manifest(out_dir / "manifest.csv", records);
  return Dataset(std::move(records), LabelRecombinationTable::lip18(), out_dir);
}

}  // namespace pixswap
