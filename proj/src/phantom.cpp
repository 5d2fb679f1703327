#include "urveda/phantom.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "urveda/errors.h"
#include "urveda/random.h"

namespace urveda {

namespace {

std::uint8_t classify(const PhantomGeometry& g, double r, double c) {
  const double d2 = (r - g.center_row) * (r - g.center_row) + (c - g.center_col) * (c - g.center_col);
  if (d2 < g.lv_radius * g.lv_radius) return 3;
  if (d2 < g.outer_radius * g.outer_radius) return 2;
  const double e2 = (r - g.rv_row) * (r - g.rv_row) + (c - g.rv_col) * (c - g.rv_col);
  if (e2 < g.rv_radius * g.rv_radius) return 1;
  return 0;
}

}  // namespace

PhantomGeometry phantom_geometry(std::uint64_t seed, std::size_t height, std::size_t width,
                                 const PhantomParams& params) {
  if (height % 2 != 0 || width % 2 != 0) {
    throw ConfigError("phantom extents must be even, got " + std::to_string(height) + "x" +
                      std::to_string(width));
  }
  if (height < 16 || width < 16) throw ConfigError("phantom extents must be at least 16x16");
  Rng rng(seed);
  const double size = static_cast<double>(std::min(height, width));
  PhantomGeometry g;
  g.phase = seed % 2 == 0 ? "ED" : "ES";
  for (std::size_t attempt = 0; attempt < params.max_retries; ++attempt) {
    double lv = rng.uniform(params.lv_radius.lo, params.lv_radius.hi) * size;
    if (g.phase == "ES") lv *= params.es_lv_scale;
    const double thickness =
        std::max(params.min_thickness_px, rng.uniform(params.myo_thickness.lo, params.myo_thickness.hi) * size);
    const double outer = lv + thickness;
    const double offset = rng.uniform(params.rv_offset.lo, params.rv_offset.hi) * outer;
    const double rv_radius = rng.uniform(params.rv_radius.lo, params.rv_radius.hi) * outer;
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double extent = std::max(outer, offset + rv_radius) + params.margin_px;
    const double row_hi = static_cast<double>(height - 1) - extent;
    const double col_hi = static_cast<double>(width - 1) - extent;
    const double u_row = rng.uniform();
    const double u_col = rng.uniform();
    if (row_hi < extent || col_hi < extent) continue;
    g.lv_radius = lv;
    g.outer_radius = outer;
    g.rv_radius = rv_radius;
    g.center_row = extent + u_row * (row_hi - extent);
    g.center_col = extent + u_col * (col_hi - extent);
    g.rv_row = g.center_row + offset * std::sin(angle);
    g.rv_col = g.center_col + offset * std::cos(angle);
    return g;
  }
  throw DataError("phantom geometry for seed " + std::to_string(seed) + " did not fit a " +
                  std::to_string(height) + "x" + std::to_string(width) + " frame after " +
                  std::to_string(params.max_retries) + " retries");
}

SliceSample generate_phantom(std::uint64_t seed, std::size_t height, std::size_t width,
                             const PhantomParams& params) {
  const PhantomGeometry g = phantom_geometry(seed, height, width, params);
  Rng rng(derive_seed(seed, 1));
  double levels[kCardiacClasses];
  for (std::size_t k = 0; k < kCardiacClasses; ++k) {
    levels[k] = params.levels[k] + rng.uniform(-params.level_jitter, params.level_jitter);
  }

  SliceSample s;
  s.id = "phantom_" + std::to_string(seed);
  s.mask = SegmentationMask::zeros(height, width, kCardiacClasses);
  s.mask.spacing = params.spacing;
  std::vector<double> pixels(height * width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const std::uint8_t label = classify(g, static_cast<double>(r), static_cast<double>(c));
      s.mask.labels[r * width + c] = label;
      const double v = levels[label] + params.noise_sigma * rng.normal();
      pixels[r * width + c] = std::clamp(v, 0.0, 1.0);
    }
  }
  s.image = Tensor({1, height, width}, std::move(pixels));
  s.provenance = {s.id, 0, g.phase};
  return s;
}

}  // namespace urveda
