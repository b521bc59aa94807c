#pragma once

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "pixswap/errors.hpp"
#include "pixswap/tensor.hpp"

namespace pixswap::png {

/// Raw 8-bit raster, interleaved (HWC) as PNG stores it.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> bytes;
};

namespace detail {

struct ImageGuard {
  png_image image{};
  ImageGuard() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~ImageGuard() { png_image_free(&image); }
  ImageGuard(const ImageGuard&) = delete;
  ImageGuard& operator=(const ImageGuard&) = delete;
};

}  // namespace detail

/// Reads a PNG. `channels` = 3 converts to RGB; `channels` = 1 requires a file
/// without colour (masks must not pass through colour conversion).
inline Raster read(const std::filesystem::path& path, int channels) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  detail::ImageGuard guard;
  png_image& image = guard.image;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  if (channels == 1) {
    if ((image.format & PNG_FORMAT_FLAG_COLOR) != 0 || (image.format & PNG_FORMAT_FLAG_COLORMAP) != 0) {
      throw DataError("mask PNG must be single-channel: " + path.string());
    }
    image.format = PNG_FORMAT_GRAY;
  } else if (channels == 3) {
    image.format = PNG_FORMAT_RGB;
  } else {
    throw ArgumentError("unsupported channel count " + std::to_string(channels));
  }
  Raster out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.channels = channels;
  out.bytes.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.bytes.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  return out;
}

inline void write(const std::filesystem::path& path, const Raster& raster) {
  detail::ImageGuard guard;
  png_image& image = guard.image;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = raster.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (raster.bytes.size() != PNG_IMAGE_SIZE(image)) {
    throw ShapeError("raster size does not match its dimensions");
  }
  if (!png_image_write_to_file(&image, path.c_str(), 0, raster.bytes.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

inline std::uint8_t to_byte(float v) {
  const float clamped = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

/// Planar float image in [0,1] -> interleaved 8-bit RGB (or gray) raster.
inline Raster to_raster(const Image& img) {
  Raster out{img.width(), img.height(), img.channels(), {}};
  if (img.channels() != 1 && img.channels() != 3) throw ShapeError("PNG output needs 1 or 3 channels");
  out.bytes.resize(img.size());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        out.bytes[(static_cast<std::size_t>(r) * img.width() + c) * img.channels() + ch] =
            to_byte(img.at(ch, r, c));
      }
    }
  }
  return out;
}

/// Ingestion normalization: byte / 255, interleaved -> planar.
inline Image to_image(const Raster& raster) {
  Image img(raster.channels, raster.height, raster.width);
  for (int r = 0; r < raster.height; ++r) {
    for (int c = 0; c < raster.width; ++c) {
      for (int ch = 0; ch < raster.channels; ++ch) {
        img.at(ch, r, c) =
            static_cast<float>(raster.bytes[(static_cast<std::size_t>(r) * raster.width + c) * raster.channels + ch]) /
            255.0f;
      }
    }
  }
  return img;
}

inline Image read_rgb(const std::filesystem::path& path) { return to_image(read(path, 3)); }

inline void write_rgb(const std::filesystem::path& path, const Image& img) { write(path, to_raster(img)); }

}  // namespace pixswap::png
