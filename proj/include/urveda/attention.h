#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "urveda/nn.h"

namespace urveda {

// Channel attention: σ(MLP(avgpool(F)) + MLP(maxpool(F))) with a shared
// two-layer perceptron C → C/r → C. Produces a C×1×1 map.
struct ChannelAttention {
  LinearLayer reduce;
  LinearLayer expand;

  static ChannelAttention create(std::size_t channels, std::size_t reduction, Rng& rng);
  std::size_t channels() const { return reduce.in_features(); }
  void collect(ParameterList& out, const std::string& prefix) const;
  void zero();
};

// Spatial attention: σ(conv_k([mean_c(F); max_c(F)])). Produces a 1×H×W map.
struct SpatialAttention {
  Conv2dLayer conv;  // 2 → 1, k×k, same padding

  static SpatialAttention create(std::size_t kernel, Rng& rng);
  void collect(ParameterList& out, const std::string& prefix) const;
  void zero();
};

enum class DamMode {
  kSequential,  // channel map first; spatial map computed from the channel-refined fusion
  kProduct,     // both maps from the raw fusion, F' = Ms ⊗ Mc ⊗ F
};

struct AttentionMaps {
  Tensor channel;  // C×1×1
  Tensor spatial;  // 1×H×W
};

struct DualAttentionModule {
  Conv2dLayer fusion;  // 1×1, 2C → C over concat(Fe, Fd)
  ChannelAttention channel;
  SpatialAttention spatial;
  DamMode mode = DamMode::kSequential;

  static DualAttentionModule create(std::size_t channels, std::size_t reduction,
                                    std::size_t spatial_kernel, DamMode mode, Rng& rng);
  std::size_t channels() const { return fusion.out_channels(); }
  void collect(ParameterList& out, const std::string& prefix) const;
  void zero();
};

Tensor channel_attention(const Tensor& fused, const ChannelAttention& cam);
Tensor spatial_attention(const Tensor& fused, const SpatialAttention& sam);

// Refines F with attention maps derived from the encoder/decoder pair.
// All three inputs must share the shape C×H×W. `maps`, when given, receives
// the two attention maps that were applied.
Tensor dam_forward(const Tensor& f, const Tensor& fe, const Tensor& fd,
                   const DualAttentionModule& dam, AttentionMaps* maps = nullptr);

struct MultiHeadSelfAttention {
  std::size_t heads = 1;
  LinearLayer query;  // d × d, bias-free
  LinearLayer key;
  LinearLayer value;
  LinearLayer output;

  static MultiHeadSelfAttention create(std::size_t dim, std::size_t heads, Rng& rng);
  std::size_t dim() const { return query.in_features(); }
  void collect(ParameterList& out, const std::string& prefix) const;
};

// softmax(QKᵀ/√d_h)·V per head, heads concatenated, then output-projected.
// `attention`, when given, receives one T×T weight matrix per head.
Tensor mhsa(const Tensor& x, const MultiHeadSelfAttention& layer,
            std::vector<Tensor>* attention = nullptr);

}  // namespace urveda
