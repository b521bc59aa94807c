#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pixswap/errors.hpp"
#include "pixswap/parsing.hpp"
#include "pixswap/rng.hpp"
#include "pixswap/tensor.hpp"

namespace pixswap {

// ---------------------------------------------------------------------------
// Geometric augmentation, applied identically to an image and its mask.
// ---------------------------------------------------------------------------

struct GeoAugConfig {
  int target_height = 256;
  int target_width = 128;
  int padding = 10;
  double flip_probability = 0.5;

  void validate() const {
    if (target_height <= 0 || target_width <= 0) throw ConfigError("target size must be positive");
    if (padding < 0) throw ConfigError("crop padding must be non-negative");
    if (flip_probability < 0.0 || flip_probability > 1.0) throw ConfigError("flip probability outside [0, 1]");
  }
};

/// Half-pixel-centre bilinear resize.
inline Image resize_bilinear(const Image& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  Image out(src.channels(), height, width);
  const double sy = static_cast<double>(src.height()) / height;
  const double sx = static_cast<double>(src.width()) / width;
  for (int r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int c = 0; c < width; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < src.channels(); ++ch) {
        const double top = src.at(ch, y0, x0) * (1 - wx) + src.at(ch, y0, x1) * wx;
        const double bottom = src.at(ch, y1, x0) * (1 - wx) + src.at(ch, y1, x1) * wx;
        out.at(ch, r, c) = static_cast<float>(top * (1 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

/// Nearest-neighbour resize; never produces a label absent from the input.
inline SemanticMask resize_nearest(const SemanticMask& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(height) * width);
  for (int r = 0; r < height; ++r) {
    const int y = std::min(static_cast<int>((r + 0.5) * src.height() / height), src.height() - 1);
    for (int c = 0; c < width; ++c) {
      const int x = std::min(static_cast<int>((c + 0.5) * src.width() / width), src.width() - 1);
      labels[static_cast<std::size_t>(r) * width + c] = src.at(y, x);
    }
  }
  return SemanticMask(height, width, std::move(labels));
}

/// Random draws of one geometric transform. Offsets are signed shifts of the
/// crop window relative to the unpadded image, each in [-padding, padding].
struct GeoParams {
  int dy = 0;
  int dx = 0;
  bool flip = false;
};

/// Output pixel (r, c) reads input (r + dy, c + dx); outside reads the zero pad
/// (background for the mask).
inline std::pair<Image, SemanticMask> shift_crop(const Image& img, const SemanticMask& mask, int dy, int dx) {
  Image out(img.channels(), img.height(), img.width(), 0.0f);
  SemanticMask out_mask(mask.height(), mask.width(), kBackground);
  for (int r = 0; r < img.height(); ++r) {
    const int y = r + dy;
    if (y < 0 || y >= img.height()) continue;
    for (int c = 0; c < img.width(); ++c) {
      const int x = c + dx;
      if (x < 0 || x >= img.width()) continue;
      for (int ch = 0; ch < img.channels(); ++ch) out.at(ch, r, c) = img.at(ch, y, x);
      out_mask.set(r, c, mask.at(y, x));
    }
  }
  return {std::move(out), std::move(out_mask)};
}

inline Image hflip(const Image& img) {
  Image out = img;
  for (int ch = 0; ch < img.channels(); ++ch) {
    for (int r = 0; r < img.height(); ++r) {
      for (int c = 0; c < img.width(); ++c) out.at(ch, r, c) = img.at(ch, r, img.width() - 1 - c);
    }
  }
  return out;
}

inline SemanticMask hflip(const SemanticMask& mask) {
  SemanticMask out = mask;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) out.set(r, c, mask.at(r, mask.width() - 1 - c));
  }
  return out;
}

inline std::pair<Image, SemanticMask> apply_geometry(const Image& img, const SemanticMask& mask,
                                                     const GeoAugConfig& cfg, const GeoParams& params) {
  if (img.height() != mask.height() || img.width() != mask.width()) {
    throw ShapeError("image and mask are not aligned");
  }
  Image resized = resize_bilinear(img, cfg.target_height, cfg.target_width);
  SemanticMask resized_mask = resize_nearest(mask, cfg.target_height, cfg.target_width);
  auto [out, out_mask] = shift_crop(resized, resized_mask, params.dy, params.dx);
  if (params.flip) return {hflip(out), hflip(out_mask)};
  return {std::move(out), std::move(out_mask)};
}

inline GeoParams draw_geometry(const GeoAugConfig& cfg, RngStream& rng) {
  GeoParams p;
  p.dy = static_cast<int>(rng.uniform_int(-cfg.padding, cfg.padding));
  p.dx = static_cast<int>(rng.uniform_int(-cfg.padding, cfg.padding));
  p.flip = rng.bernoulli(cfg.flip_probability);
  return p;
}

/// Resize to target, pad-and-random-crop, random horizontal flip.
inline std::pair<Image, SemanticMask> geo_augment(const Image& img, const SemanticMask& mask, const GeoAugConfig& cfg,
                                                  RngStream& rng) {
  cfg.validate();
  return apply_geometry(img, mask, cfg, draw_geometry(cfg, rng));
}

// ---------------------------------------------------------------------------
// Random erasing
// ---------------------------------------------------------------------------

enum class EraseFill { kConstant, kRandom };

struct RandomErasingConfig {
  double probability = 0.5;
  double area_min = 0.02;
  double area_max = 0.4;
  double aspect_min = 0.3;
  double aspect_max = 3.33;
  EraseFill fill = EraseFill::kRandom;
  float fill_value = 0.0f;
  int max_attempts = 100;

  void validate() const {
    if (!(probability >= 0.0 && probability <= 1.0)) throw ConfigError("erasing probability outside [0, 1]");
    if (!(area_min > 0.0 && area_min <= area_max && area_max < 1.0)) {
      throw ConfigError("erasing area range must satisfy 0 < min <= max < 1");
    }
    if (!(aspect_min > 0.0 && aspect_min <= aspect_max)) throw ConfigError("erasing aspect range invalid");
    if (max_attempts < 1) throw ConfigError("erasing needs at least one attempt");
  }
};

struct EraseRect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

/// Draws a rectangle whose realised (integer) area ratio and height/width ratio
/// both lie inside the configured ranges. Gives up after max_attempts draws.
inline std::optional<EraseRect> sample_erase_rect(int height, int width, const RandomErasingConfig& cfg,
                                                  RngStream& rng) {
  const double area = static_cast<double>(height) * width;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const double target = rng.uniform(cfg.area_min, cfg.area_max) * area;
    const double aspect = rng.uniform(cfg.aspect_min, cfg.aspect_max);
    const int h = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int w = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (h < 1 || w < 1 || h >= height || w >= width) continue;
    const double ratio = h * static_cast<double>(w) / area;
    const double realised_aspect = static_cast<double>(h) / w;
    if (ratio < cfg.area_min || ratio > cfg.area_max) continue;
    if (realised_aspect < cfg.aspect_min || realised_aspect > cfg.aspect_max) continue;
    EraseRect rect{0, 0, h, w};
    rect.top = static_cast<int>(rng.uniform_int(0, height - h));
    rect.left = static_cast<int>(rng.uniform_int(0, width - w));
    return rect;
  }
  return std::nullopt;
}

inline Image random_erase(const Image& img, const RandomErasingConfig& cfg, RngStream& rng) {
  cfg.validate();
  if (rng.uniform() >= cfg.probability) return img;
  const auto rect = sample_erase_rect(img.height(), img.width(), cfg, rng);
  if (!rect) return img;
  Image out = img;
  for (int ch = 0; ch < img.channels(); ++ch) {
    for (int r = rect->top; r < rect->top + rect->height; ++r) {
      for (int c = rect->left; c < rect->left + rect->width; ++c) {
        out.at(ch, r, c) = cfg.fill == EraseFill::kConstant ? cfg.fill_value : static_cast<float>(rng.uniform());
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PK identity-balanced sampling
// ---------------------------------------------------------------------------

struct PKSpec {
  int identities = 16;  // P
  int instances = 4;    // K

  int batch_size() const { return identities * instances; }

  void validate() const {
    if (identities < 1 || instances < 1) throw ConfigError("PK sampling needs P >= 1 and K >= 1");
  }
};

/// Endless stream of index batches: P distinct identities, K indices each, laid
/// out identity by identity. Identities with fewer than K samples are drawn with
/// replacement.
class PKBatchStream {
 public:
  PKBatchStream(std::vector<std::vector<std::size_t>> groups, PKSpec spec)
      : groups_(std::move(groups)), spec_(spec) {
    spec_.validate();
    std::erase_if(groups_, [](const auto& g) { return g.empty(); });
    if (groups_.size() < static_cast<std::size_t>(spec_.identities)) {
      throw ConfigError("PK sampling needs " + std::to_string(spec_.identities) + " identities, only " +
                        std::to_string(groups_.size()) + " available");
    }
  }

  /// Groups the given split of `dataset` by identity (identity-sorted order).
  static PKBatchStream from_dataset(const Dataset& dataset, PKSpec spec, Split split = Split::kTrain) {
    std::vector<std::vector<std::size_t>> groups;
    for (const auto& [identity, indices] : dataset.identity_index()) {
      std::vector<std::size_t> members;
      for (auto i : indices) {
        if (dataset.record(i).split == split) members.push_back(i);
      }
      if (!members.empty()) groups.push_back(std::move(members));
    }
    return PKBatchStream(std::move(groups), spec);
  }

  std::vector<std::size_t> next(RngStream& rng) const {
    std::vector<std::size_t> order(groups_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const auto P = static_cast<std::size_t>(spec_.identities);
    const auto K = static_cast<std::size_t>(spec_.instances);
    for (std::size_t i = 0; i < P; ++i) {
      const std::size_t j = i + rng.uniform_index(order.size() - i);
      std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> batch;
    batch.reserve(P * K);
    for (std::size_t i = 0; i < P; ++i) {
      std::vector<std::size_t> members = groups_[order[i]];
      if (members.size() >= K) {
        for (std::size_t k = 0; k < K; ++k) {
          const std::size_t j = k + rng.uniform_index(members.size() - k);
          std::swap(members[k], members[j]);
          batch.push_back(members[k]);
        }
      } else {
        for (std::size_t k = 0; k < K; ++k) batch.push_back(members[rng.uniform_index(members.size())]);
      }
    }
    return batch;
  }

  const PKSpec& spec() const { return spec_; }
  std::size_t num_identities() const { return groups_.size(); }

 private:
  std::vector<std::vector<std::size_t>> groups_;
  PKSpec spec_;
};

}  // namespace pixswap
