#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "urveda/tensor.h"

namespace urveda {

enum class EdgeMethod { kSobel, kSobelThresholded };

struct EdgeMap {
  Tensor values;  // 1×H×W in [0,1], never tracked by a tape
  std::size_t source_height = 0;
  std::size_t source_width = 0;
  EdgeMethod method = EdgeMethod::kSobel;
};

struct EdgeOptions {
  // When set, normalized magnitudes >= threshold become 1 and the rest 0.
  std::optional<double> threshold;
};

// Sobel gradient magnitude normalized by its maximum (all zeros when the
// maximum is 0). Borders replicate the nearest pixel.
EdgeMap sobel_magnitude(const Tensor& image, const EdgeOptions& options = {});

// Level 0 is sobel_magnitude(image); level k is the 2×2 average pool of
// level k−1 clamped to [0,1].
std::vector<EdgeMap> edge_pyramid(const Tensor& image, std::size_t levels,
                                  const EdgeOptions& options = {});

}  // namespace urveda
