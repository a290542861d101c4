#pragma once

#include <cstddef>
#include <vector>

namespace osnd {

// Channel-major (CHW) float image, values nominally in [0, 1].
struct Image {
  int channels = 3;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w),
        pixels(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t index(int c, int row, int col) const {
    return (static_cast<std::size_t>(c) * height + row) * width + col;
  }
  float& at(int c, int row, int col) { return pixels[index(c, row, col)]; }
  float at(int c, int row, int col) const { return pixels[index(c, row, col)]; }

  bool same_shape(const Image& other) const {
    return channels == other.channels && height == other.height &&
           width == other.width;
  }
  friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace osnd
