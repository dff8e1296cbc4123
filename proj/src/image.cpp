#include "hoverdepth/image.hpp"

namespace hoverdepth {

GrayImage to_gray(const ColorImage& image) {
  GrayImage out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = luma(image[i]);
  return out;
}

GrayImage gradient_magnitude(const GrayImage& image) {
  const int w = image.width();
  const int h = image.height();
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0);
      const int xp = std::min(x + 1, w - 1);
      const float gx = 0.5f * (image(xp, y) - image(xm, y));
      const float gy = 0.5f * (image(x, yp) - image(x, ym));
      out(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

}  // namespace hoverdepth
