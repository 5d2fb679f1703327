#pragma once

// Synthetic short-axis cardiac phantoms: an LV disk inside a myocardial
// annulus with an RV crescent hugging one side, on a dark background.

#include <cstdint>
#include <optional>

#include "urveda/dataset.h"

namespace urveda {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct PhantomParams {
  Range lv_radius{0.09, 0.14};        // fraction of min(H, W)
  Range myo_thickness{0.05, 0.08};    // fraction of min(H, W), never below min_thickness_px
  double min_thickness_px = 2.0;
  Range rv_offset{0.45, 0.70};        // RV circle centre distance, fraction of the annulus outer radius
  Range rv_radius{1.05, 1.30};        // fraction of the annulus outer radius
  double es_lv_scale = 0.8;           // ES phantoms contract the LV cavity
  double margin_px = 2.0;
  // Intensity level per class: background, RV, LMyo, LV.
  double levels[kCardiacClasses] = {0.10, 0.65, 0.35, 0.90};
  double level_jitter = 0.05;         // uniform ± per phantom
  double noise_sigma = 0.05;
  std::optional<PixelSpacing> spacing = PixelSpacing{1.0, 1.0};
  std::size_t max_retries = 100;
};

// Pixel (r, c) has its centre at (r, c). Classification order: LV disk,
// then annulus, then RV circle, else background.
struct PhantomGeometry {
  double center_row = 0.0;
  double center_col = 0.0;
  double lv_radius = 0.0;
  double outer_radius = 0.0;
  double rv_row = 0.0;
  double rv_col = 0.0;
  double rv_radius = 0.0;
  std::string phase;
};

// Throws ConfigError on odd or tiny extents, DataError when no geometry fits
// within max_retries.
PhantomGeometry phantom_geometry(std::uint64_t seed, std::size_t height, std::size_t width,
                                 const PhantomParams& params = {});
SliceSample generate_phantom(std::uint64_t seed, std::size_t height, std::size_t width,
                             const PhantomParams& params = {});

}  // namespace urveda
