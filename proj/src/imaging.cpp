#include "urveda/imaging.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "urveda/errors.h"

namespace urveda {

namespace {

std::vector<std::uint8_t> encode_pnm(const char* magic, std::size_t h, std::size_t w,
                                     const std::vector<std::uint8_t>& pixels) {
  const std::string header =
      std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

// Returns (width, height, payload offset) after validating the magic and maxval.
struct PnmHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t offset = 0;
};

PnmHeader parse_pnm(std::span<const std::uint8_t> bytes, const char* magic) {
  if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
    throw DataError(std::string("not a binary ") + magic + " image");
  }
  std::size_t pos = 2;
  auto next_number = [&]() -> std::size_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw DataError("malformed PNM header");
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1u << 24)) throw DataError("PNM header value out of range");
      ++pos;
    }
    return v;
  };
  PnmHeader h;
  h.width = next_number();
  h.height = next_number();
  if (next_number() != 255) throw DataError("only maxval 255 PNM images are supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw DataError("malformed PNM header");
  h.offset = pos + 1;
  if (h.width == 0 || h.height == 0) throw DataError("PNM image has zero extent");
  return h;
}

}  // namespace

std::vector<VolumeSlice> slice_volume(const Volume& volume) {
  const std::size_t nx = volume.nx();
  const std::size_t ny = volume.ny();
  const std::size_t plane = nx * ny;
  std::vector<VolumeSlice> slices;
  for (std::size_t z = 0; z < volume.planes(); ++z) {
    VolumeSlice s;
    s.index = z;
    s.image.height = ny;
    s.image.width = nx;
    s.image.pixels.assign(volume.data.begin() + static_cast<std::ptrdiff_t>(z * plane),
                          volume.data.begin() + static_cast<std::ptrdiff_t>((z + 1) * plane));
    slices.push_back(std::move(s));
  }
  return slices;
}

Image2D normalize_intensity(const Image2D& img) {
  Image2D out = img;
  if (img.pixels.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  for (double& v : out.pixels) v = range > 0.0 ? std::clamp((v - lo) / range, 0.0, 1.0) : 0.0;
  return out;
}

Image2D resize_bilinear(const Image2D& img, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("resize target extents must be positive");
  if (img.height == 0 || img.width == 0) throw ShapeError("cannot resize an empty image");
  Image2D out{height, width, std::vector<double>(height * width)};
  auto source = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
    if (n_out == 1 || n_in == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1);
  };
  for (std::size_t r = 0; r < height; ++r) {
    const double sr = source(r, height, img.height);
    const auto r0 = std::min(static_cast<std::size_t>(sr), img.height - 1);
    const std::size_t r1 = std::min(r0 + 1, img.height - 1);
    const double fr = sr - static_cast<double>(r0);
    for (std::size_t c = 0; c < width; ++c) {
      const double sc = source(c, width, img.width);
      const auto c0 = std::min(static_cast<std::size_t>(sc), img.width - 1);
      const std::size_t c1 = std::min(c0 + 1, img.width - 1);
      const double fc = sc - static_cast<double>(c0);
      const double top = img.at(r0, c0) * (1.0 - fc) + img.at(r0, c1) * fc;
      const double bottom = img.at(r1, c0) * (1.0 - fc) + img.at(r1, c1) * fc;
      out.pixels[r * width + c] = top * (1.0 - fr) + bottom * fr;
    }
  }
  return out;
}

Tensor normalize_resize(const Image2D& img, std::size_t height, std::size_t width) {
  Image2D resized = resize_bilinear(normalize_intensity(img), height, width);
  for (double& v : resized.pixels) v = std::clamp(v, 0.0, 1.0);
  return Tensor({1, height, width}, std::move(resized.pixels));
}

SegmentationMask resize_mask(const SegmentationMask& mask, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("resize target extents must be positive");
  SegmentationMask out = SegmentationMask::zeros(height, width, mask.classes);
  out.spacing = mask.spacing;
  if (mask.spacing) {
    out.spacing = PixelSpacing{
        mask.spacing->row_mm * static_cast<double>(mask.height) / static_cast<double>(height),
        mask.spacing->col_mm * static_cast<double>(mask.width) / static_cast<double>(width)};
  }
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t sr = std::min(mask.height - 1, (2 * r + 1) * mask.height / (2 * height));
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t sc = std::min(mask.width - 1, (2 * c + 1) * mask.width / (2 * width));
      out.labels[r * width + c] = mask.labels[sr * mask.width + sc];
    }
  }
  return out;
}

SegmentationMask mask_from_image(const Image2D& labels, std::size_t classes) {
  SegmentationMask m = SegmentationMask::zeros(labels.height, labels.width, classes);
  for (std::size_t i = 0; i < labels.pixels.size(); ++i) {
    const double v = labels.pixels[i];
    if (!(v >= 0.0) || v >= static_cast<double>(classes) || v != std::floor(v)) {
      throw DataError("mask value " + std::to_string(v) + " at pixel (" +
                      std::to_string(i / labels.width) + ", " + std::to_string(i % labels.width) +
                      ") is not a label in [0, " + std::to_string(classes) + ")");
    }
    m.labels[i] = static_cast<std::uint8_t>(v);
  }
  return m;
}

Gray8 to_gray8(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 1) {
    throw ShapeError("expected a 1xHxW image, got " + shape_str(image.shape()));
  }
  Gray8 g{image.dim(1), image.dim(2), {}};
  g.pixels.reserve(image.numel());
  for (double v : image.data()) {
    g.pixels.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return g;
}

std::vector<std::uint8_t> encode_pgm(const Gray8& image) {
  if (image.pixels.size() != image.height * image.width) throw ShapeError("PGM buffer size mismatch");
  return encode_pnm("P5", image.height, image.width, image.pixels);
}

std::vector<std::uint8_t> encode_ppm(const Rgb8& image) {
  if (image.pixels.size() != 3 * image.height * image.width) throw ShapeError("PPM buffer size mismatch");
  return encode_pnm("P6", image.height, image.width, image.pixels);
}

Gray8 decode_pgm(std::span<const std::uint8_t> bytes) {
  const PnmHeader h = parse_pnm(bytes, "P5");
  const std::size_t n = h.width * h.height;
  if (bytes.size() < h.offset + n) throw DataError("PGM payload truncated");
  return {h.height, h.width, {bytes.begin() + static_cast<std::ptrdiff_t>(h.offset),
                              bytes.begin() + static_cast<std::ptrdiff_t>(h.offset + n)}};
}

Rgb8 decode_ppm(std::span<const std::uint8_t> bytes) {
  const PnmHeader h = parse_pnm(bytes, "P6");
  const std::size_t n = 3 * h.width * h.height;
  if (bytes.size() < h.offset + n) throw DataError("PPM payload truncated");
  return {h.height, h.width, {bytes.begin() + static_cast<std::ptrdiff_t>(h.offset),
                              bytes.begin() + static_cast<std::ptrdiff_t>(h.offset + n)}};
}

}  // namespace urveda
