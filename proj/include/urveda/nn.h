#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "urveda/random.h"
#include "urveda/tensor.h"

namespace urveda {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};
using ParameterList = std::vector<NamedParameter>;

std::size_t count_elements(const ParameterList& params);
void zero_grads(ParameterList& params);

// Glorot/Xavier uniform in ±sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

enum class Padding { kSame, kValid };

struct Conv2dLayer {
  Tensor weight;  // out × in × kh × kw
  Tensor bias;    // out
  std::size_t stride = 1;
  Padding padding = Padding::kSame;

  static Conv2dLayer create(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                            Rng& rng, Padding padding = Padding::kSame, std::size_t stride = 1);

  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t kernel_h() const { return weight.dim(2); }
  std::size_t kernel_w() const { return weight.dim(3); }

  void collect(ParameterList& out, const std::string& prefix) const;
  void zero();
};

struct LinearLayer {
  Tensor weight;  // out × in
  Tensor bias;    // out; undefined for bias-free projections

  static LinearLayer create(std::size_t in_features, std::size_t out_features, Rng& rng,
                            bool with_bias = true);

  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }

  void collect(ParameterList& out, const std::string& prefix) const;
  void zero();
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;
  double epsilon = 1e-5;

  static LayerNorm create(std::size_t length, double epsilon = 1e-5);
  std::size_t length() const { return gamma.numel(); }
  void collect(ParameterList& out, const std::string& prefix) const;
};

// Cross-correlation of x (C×H×W) with the layer's kernels, plus bias.
Tensor conv2d(const Tensor& x, const Conv2dLayer& layer);
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              Padding padding);

// x is [N×in] or a single [in] vector; returns x·Wᵀ + b.
Tensor linear(const Tensor& x, const LinearLayer& layer);

// Normalizes over the trailing axis (population variance), then applies γ, β.
Tensor layernorm(const Tensor& x, const LayerNorm& ln);
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double epsilon);

// 2×2 window, stride 2, on C×H×W with even H and W.
Tensor maxpool2d(const Tensor& x);
Tensor avgpool2d(const Tensor& x);
// Nearest-neighbour doubling of H and W on C×H×W.
Tensor upsample2x(const Tensor& x);
// Nearest-neighbour replication of every pixel into a factor×factor block.
Tensor upsample_nearest(const Tensor& x, std::size_t factor);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);

}  // namespace urveda
