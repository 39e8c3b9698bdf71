#include "lfm/tensor.hpp"

namespace lfm {

Image nyquist_checkerboard(std::size_t height, std::size_t width, double amplitude) {
  Image out(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      out(r, c) = ((r + c) % 2 == 0) ? amplitude : -amplitude;
    }
  }
  return out;
}

double sum_of_squares(const Image& image) {
  double s = 0.0;
  for (double v : image.pixels()) s += v * v;
  return s;
}

double mean(const Image& image) {
  if (image.empty()) throw DimensionError("mean of empty image");
  double s = 0.0;
  for (double v : image.pixels()) s += v;
  return s / static_cast<double>(image.size());
}

Tensor stack_images(std::span<const Image> images) {
  if (images.empty()) throw ArgumentError("cannot stack an empty image list");
  const std::size_t h = images.front().height();
  const std::size_t w = images.front().width();
  Tensor out({images.size(), 1, h, w});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height() != h || images[i].width() != w) {
      throw ArgumentError("mixed image sizes in batch: " + std::to_string(h) + "x" +
                          std::to_string(w) + " vs " + std::to_string(images[i].height()) + "x" +
                          std::to_string(images[i].width()));
    }
    std::copy(images[i].pixels().begin(), images[i].pixels().end(), out.plane(i, 0).begin());
  }
  return out;
}

}  // namespace lfm
