#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "urveda/attention.h"
#include "urveda/nn.h"

namespace urveda {

struct PatchEmbedding {
  std::size_t patch = 1;
  std::size_t channels = 1;
  std::size_t grid_h = 1;
  std::size_t grid_w = 1;
  LinearLayer projection;  // C·p² → d
  Tensor position;         // T×d, learned

  static PatchEmbedding create(std::size_t channels, std::size_t patch, std::size_t dim,
                               std::size_t grid_h, std::size_t grid_w, Rng& rng);
  std::size_t dim() const { return projection.out_features(); }
  std::size_t tokens() const { return grid_h * grid_w; }
  void collect(ParameterList& out, const std::string& prefix) const;
};

struct ViTLayer {
  LayerNorm norm_attention;
  MultiHeadSelfAttention attention;
  LayerNorm norm_mlp;
  LinearLayer mlp_in;   // d → 4d
  LinearLayer mlp_out;  // 4d → d

  static ViTLayer create(std::size_t dim, std::size_t heads, Rng& rng, std::size_t mlp_ratio = 4);
  std::size_t dim() const { return attention.dim(); }
  void collect(ParameterList& out, const std::string& prefix) const;
  // Zeroes the two projections that feed the residual sums.
  void zero_residual_branches();
};

// Flattens p×p patches (channel-major within a patch, patches in row-major
// grid order) into a T×(C·p²) matrix.
Tensor patchify(const Tensor& x, std::size_t patch);

// Patch tokens projected to d dimensions plus positional embeddings: T×d.
Tensor embed_patches(const Tensor& x, const PatchEmbedding& pe);

// X̄ = MHSA(LN(X)) + X, then MLP(LN(X̄)) + X̄.
Tensor vit_layer_forward(const Tensor& x, const ViTLayer& layer);
Tensor vit_stack_forward(const Tensor& x, std::span<const ViTLayer> layers);

// T×d tokens back to a d×grid_h×grid_w map; token t lands at row-major cell t.
Tensor tokens_to_map(const Tensor& tokens, std::size_t grid_h, std::size_t grid_w);
// Inverse of tokens_to_map.
Tensor map_to_tokens(const Tensor& map);

}  // namespace urveda
