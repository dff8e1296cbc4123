#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace hoverdepth {

struct Rgb {
  float r = 0.0f;
  float g = 0.0f;
  float b = 0.0f;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline float color_distance(const Rgb& a, const Rgb& b) {
  const float dr = a.r - b.r;
  const float dg = a.g - b.g;
  const float db = a.b - b.b;
  return std::sqrt(dr * dr + dg * dg + db * db);
}

inline float luma(const Rgb& c) {
  return 0.299f * c.r + 0.587f * c.g + 0.114f * c.b;
}

struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Dense row-major image. Pixel (x, y) has its center at integer
/// coordinates, which is the convention the camera intrinsics use.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  T& operator()(int x, int y) {
    assert(contains(x, y));
    return data_[index(x, y)];
  }
  const T& operator()(int x, int y) const {
    assert(contains(x, y));
    return data_[index(x, y)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Image<float>;
using ColorImage = Image<Rgb>;

GrayImage to_gray(const ColorImage& image);

/// Gradient magnitude from centered differences with replicated borders.
GrayImage gradient_magnitude(const GrayImage& image);

/// Bilinear lookup. Returns false when (x, y) falls outside
/// [0, width-1] x [0, height-1].
inline bool sample_bilinear(const GrayImage& image, double x, double y,
                            double* value) {
  const int w = image.width();
  const int h = image.height();
  if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1)) return false;
  int ix = static_cast<int>(x);
  int iy = static_cast<int>(y);
  if (ix >= w - 1) ix = w - 2;
  if (iy >= h - 1) iy = h - 2;
  if (ix < 0 || iy < 0) {
    // Degenerate one-pixel-wide image.
    *value = image(std::max(ix, 0), std::max(iy, 0));
    return true;
  }
  const double fx = x - ix;
  const double fy = y - iy;
  const float* row0 = &image.data()[image.index(ix, iy)];
  const float* row1 = row0 + w;
  const double top = row0[0] + fx * (row0[1] - row0[0]);
  const double bottom = row1[0] + fx * (row1[1] - row1[0]);
  *value = top + fy * (bottom - top);
  return true;
}

}  // namespace hoverdepth
