#pragma once

// 2D slice handling: volume slicing, intensity normalization, resampling and
// 8-bit portable image export.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "urveda/metrics.h"
#include "urveda/nifti.h"
#include "urveda/tensor.h"

namespace urveda {

struct Image2D {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // row-major

  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
};

struct VolumeSlice {
  std::size_t index = 0;
  Image2D image;
};

// One 2D plane per index past y, in file order. Rows follow y, columns x.
std::vector<VolumeSlice> slice_volume(const Volume& volume);

// Min-max to [0,1]; a constant image maps to all zeros.
Image2D normalize_intensity(const Image2D& img);
// Align-corners bilinear resampling.
Image2D resize_bilinear(const Image2D& img, std::size_t height, std::size_t width);
// Normalize then resample; output values stay in [0,1].
Tensor normalize_resize(const Image2D& img, std::size_t height, std::size_t width);

// Nearest-neighbour label resampling (labels never interpolate).
SegmentationMask resize_mask(const SegmentationMask& mask, std::size_t height, std::size_t width);

// Converts a label plane to a mask; every value must be an integer in [0, classes).
SegmentationMask mask_from_image(const Image2D& labels, std::size_t classes);

struct Gray8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

struct Rgb8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB
};

// [0,1] tensor (1×H×W) to 8-bit grayscale, round-to-nearest.
Gray8 to_gray8(const Tensor& image);

// Binary PGM (P5) / PPM (P6) with maxval 255.
std::vector<std::uint8_t> encode_pgm(const Gray8& image);
std::vector<std::uint8_t> encode_ppm(const Rgb8& image);
Gray8 decode_pgm(std::span<const std::uint8_t> bytes);
Rgb8 decode_ppm(std::span<const std::uint8_t> bytes);

}  // namespace urveda
