#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pixswap/errors.hpp"

namespace pixswap {

/// Recombined body-part legend shared by masks, sampling and the generator.
enum Part : std::uint8_t {
  kBackground = 0,
  kHead = 1,
  kUpperClothes = 2,
  kPants = 3,
  kArms = 4,
  kLegs = 5,
};
inline constexpr int kNumParts = 6;

struct Position {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const Position&) const = default;
};

/// C x H x W image with planar (channel-major) storage, values in [0, 1].
class Image {
 public:
  Image() = default;

  Image(int channels, int height, int width, float fill = 0.0f)
      : channels_(channels), height_(height), width_(width) {
    check_dims();
    data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
  }

  Image(int channels, int height, int width, std::vector<float> data)
      : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    check_dims();
    if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
      throw ShapeError("image data length " + std::to_string(data_.size()) + " != " +
                       std::to_string(channels) + "x" + std::to_string(height) + "x" +
                       std::to_string(width));
    }
  }

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Unchecked accessors for hot loops.
  float& at(int c, std::size_t row, std::size_t col) {
    return data_[c * plane_size() + row * width_ + col];
  }
  float at(int c, std::size_t row, std::size_t col) const {
    return data_[c * plane_size() + row * width_ + col];
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::span<float> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  bool operator==(const Image&) const = default;

 private:
  void check_dims() const {
    if (channels_ <= 0 || height_ <= 0 || width_ <= 0) {
      throw ShapeError("image dimensions must be positive");
    }
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

inline void check_bounds(std::size_t row, std::size_t col, int height, int width) {
  if (row >= static_cast<std::size_t>(height) || col >= static_cast<std::size_t>(width)) {
    throw BoundsError("pixel (" + std::to_string(row) + ", " + std::to_string(col) +
                      ") outside " + std::to_string(height) + "x" + std::to_string(width));
  }
}

/// The C channel values at (row, col), in channel order.
inline std::vector<float> pixel_at(const Image& img, std::size_t row, std::size_t col) {
  check_bounds(row, col, img.height(), img.width());
  std::vector<float> out(img.channels());
  for (int c = 0; c < img.channels(); ++c) out[c] = img.at(c, row, col);
  return out;
}

inline void set_pixel(Image& img, std::size_t row, std::size_t col, std::span<const float> value) {
  check_bounds(row, col, img.height(), img.width());
  if (value.size() != static_cast<std::size_t>(img.channels())) {
    throw ShapeError("pixel has " + std::to_string(value.size()) + " values, image has " +
                     std::to_string(img.channels()) + " channels");
  }
  for (int c = 0; c < img.channels(); ++c) img.at(c, row, col) = value[c];
}

/// H x W label map over the six recombined parts.
class SemanticMask {
 public:
  SemanticMask() = default;

  SemanticMask(int height, int width, std::uint8_t fill = kBackground)
      : height_(height), width_(width), labels_(static_cast<std::size_t>(height) * width, fill) {
    if (height <= 0 || width <= 0) throw ShapeError("mask dimensions must be positive");
    if (fill >= kNumParts) throw ArgumentError("mask label " + std::to_string(fill) + " not in 0..5");
  }

  SemanticMask(int height, int width, std::vector<std::uint8_t> labels)
      : height_(height), width_(width), labels_(std::move(labels)) {
    if (height <= 0 || width <= 0) throw ShapeError("mask dimensions must be positive");
    if (labels_.size() != static_cast<std::size_t>(height) * width) {
      throw ShapeError("mask label count " + std::to_string(labels_.size()) + " != " +
                       std::to_string(height) + "x" + std::to_string(width));
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] >= kNumParts) {
        throw DataError("mask label " + std::to_string(labels_[i]) + " at index " +
                        std::to_string(i) + " not in 0..5");
      }
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return labels_.size(); }

  std::uint8_t at(std::size_t row, std::size_t col) const { return labels_[row * width_ + col]; }
  void set(std::size_t row, std::size_t col, std::uint8_t label) {
    if (label >= kNumParts) throw ArgumentError("mask label " + std::to_string(label) + " not in 0..5");
    labels_[row * width_ + col] = label;
  }
  std::span<const std::uint8_t> labels() const { return labels_; }

  bool operator==(const SemanticMask&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> labels_;
};

inline void check_class_id(int class_id) {
  if (class_id < 0 || class_id >= kNumParts) {
    throw ArgumentError("class id " + std::to_string(class_id) + " not in 0..5");
  }
}

/// Positions labelled `class_id`, in raster order.
inline std::vector<Position> raster_positions(const SemanticMask& mask, int class_id) {
  check_class_id(class_id);
  std::vector<Position> out;
  const auto labels = mask.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == class_id) out.push_back({i / mask.width(), i % mask.width()});
  }
  return out;
}

/// Images, aligned masks and integer identity labels of one mini-batch.
struct Batch {
  std::vector<Image> images;
  std::vector<SemanticMask> masks;
  std::vector<int> identities;

  std::size_t size() const { return images.size(); }

  void validate() const {
    if (masks.size() != images.size() || identities.size() != images.size()) {
      throw ShapeError("batch lists differ in length: images " + std::to_string(images.size()) +
                       ", masks " + std::to_string(masks.size()) + ", identities " +
                       std::to_string(identities.size()));
    }
    for (std::size_t i = 0; i < images.size(); ++i) {
      const Image& img = images[i];
      if (img.channels() != images[0].channels() || img.height() != images[0].height() ||
          img.width() != images[0].width()) {
        throw ShapeError("batch image " + std::to_string(i) + " differs in shape from image 0");
      }
      if (masks[i].height() != img.height() || masks[i].width() != img.width()) {
        throw ShapeError("batch mask " + std::to_string(i) + " not aligned with its image");
      }
    }
  }

  bool operator==(const Batch&) const = default;
};

/// Dense row-major matrix; rows are samples in every use here.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

}  // namespace pixswap
