#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skinaudit/error.hpp"

namespace skinaudit {

struct Size {
  int width = 0;
  int height = 0;
  friend bool operator==(const Size&, const Size&) = default;
};

inline std::string to_string(Size s) {
  return std::to_string(s.width) + "x" + std::to_string(s.height);
}

using Rgb = std::array<std::uint8_t, 3>;

// Row-major 2-D raster.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) {
      throw Error(ErrorKind::InvalidArgument, "negative image dimensions");
    }
  }
  explicit Image(Size s, T fill = T{}) : Image(s.width, s.height, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Size size() const noexcept { return {width_, height_}; }
  std::size_t pixel_count() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using RgbImage = Image<Rgb>;
using GrayImage = Image<std::uint8_t>;

// true = lesion (or hair, for exclusion masks). Stored as bytes, not vector<bool>.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false)
      : bits_(width, height, fill ? 1 : 0) {}
  explicit BinaryMask(Size s, bool fill = false) : BinaryMask(s.width, s.height, fill) {}

  int width() const noexcept { return bits_.width(); }
  int height() const noexcept { return bits_.height(); }
  Size size() const noexcept { return bits_.size(); }
  std::size_t pixel_count() const noexcept { return bits_.pixel_count(); }

  bool operator()(int x, int y) const { return bits_(x, y) != 0; }
  void set(int x, int y, bool v) { bits_(x, y) = v ? 1 : 0; }

  bool at(std::size_t i) const { return bits_.pixels()[i] != 0; }
  void set_at(std::size_t i, bool v) { bits_.pixels()[i] = v ? 1 : 0; }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto b : bits_.pixels()) n += b != 0;
    return n;
  }
  bool all_false() const noexcept { return count() == 0; }
  bool all_true() const noexcept { return count() == pixel_count(); }

  // 255 where set, 0 elsewhere; white = foreground.
  GrayImage to_gray() const {
    GrayImage g(size());
    for (std::size_t i = 0; i < pixel_count(); ++i) g.pixels()[i] = at(i) ? 255 : 0;
    return g;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  Image<std::uint8_t> bits_;
};

inline void require_same_size(Size a, Size b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": " + to_string(a) + " vs " + to_string(b));
  }
}

}  // namespace skinaudit
