#include "urveda/edge.h"

#include <algorithm>
#include <cmath>

#include "urveda/nn.h"

namespace urveda {

EdgeMap sobel_magnitude(const Tensor& image, const EdgeOptions& options) {
  if (image.rank() != 3 || image.dim(0) != 1) {
    throw ShapeError("edge detection expects a single-channel 1×H×W image, got " +
                     shape_str(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2);
  const auto px = image.data();
  auto pixel = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
    y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(h) - 1);
    x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(w) - 1);
    return px[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };

  std::vector<double> magnitude(h * w);
  double peak = 0.0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto r = static_cast<std::ptrdiff_t>(y), c = static_cast<std::ptrdiff_t>(x);
      // Each response is a difference of two identically weighted sums, so
      // flat neighbourhoods give exactly zero.
      const double gx = (pixel(r - 1, c + 1) + 2.0 * pixel(r, c + 1) + pixel(r + 1, c + 1)) -
                        (pixel(r - 1, c - 1) + 2.0 * pixel(r, c - 1) + pixel(r + 1, c - 1));
      const double gy = (pixel(r + 1, c - 1) + 2.0 * pixel(r + 1, c) + pixel(r + 1, c + 1)) -
                        (pixel(r - 1, c - 1) + 2.0 * pixel(r - 1, c) + pixel(r - 1, c + 1));
      const double m = std::sqrt(gx * gx + gy * gy);
      magnitude[y * w + x] = m;
      peak = std::max(peak, m);
    }
  }
  for (double& m : magnitude) {
    m = peak > 0.0 ? m / peak : 0.0;
    if (options.threshold) m = m >= *options.threshold ? 1.0 : 0.0;
  }
  return {Tensor({1, h, w}, std::move(magnitude)), h, w,
          options.threshold ? EdgeMethod::kSobelThresholded : EdgeMethod::kSobel};
}

std::vector<EdgeMap> edge_pyramid(const Tensor& image, std::size_t levels,
                                  const EdgeOptions& options) {
  if (levels == 0) throw ShapeError("edge pyramid needs at least one level");
  if (image.rank() == 3) {
    const std::size_t factor = std::size_t{1} << (levels - 1);
    if (image.dim(1) % factor != 0 || image.dim(2) % factor != 0) {
      throw ShapeError("image " + shape_str(image.shape()) + " not divisible by 2^" +
                       std::to_string(levels - 1) + " for an edge pyramid");
    }
  }
  std::vector<EdgeMap> pyramid;
  pyramid.push_back(sobel_magnitude(image, options));
  for (std::size_t k = 1; k < levels; ++k) {
    Tensor pooled = avgpool2d(pyramid.back().values.detach());
    for (double& v : pooled.mutable_data()) v = std::clamp(v, 0.0, 1.0);
    pyramid.push_back({pooled, pyramid.front().source_height, pyramid.front().source_width,
                       pyramid.front().method});
  }
  return pyramid;
}

}  // namespace urveda
