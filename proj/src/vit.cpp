#include "urveda/vit.h"

namespace urveda {

PatchEmbedding PatchEmbedding::create(std::size_t channels, std::size_t patch, std::size_t dim,
                                      std::size_t grid_h, std::size_t grid_w, Rng& rng) {
  if (patch == 0) throw ConfigError("patch size must be positive");
  PatchEmbedding pe;
  pe.patch = patch;
  pe.channels = channels;
  pe.grid_h = grid_h;
  pe.grid_w = grid_w;
  pe.projection = LinearLayer::create(channels * patch * patch, dim, rng);
  pe.position = Tensor::zeros({grid_h * grid_w, dim});
  for (double& v : pe.position.mutable_data()) v = 0.02 * rng.normal();
  pe.position.set_requires_grad(true);
  return pe;
}

void PatchEmbedding::collect(ParameterList& out, const std::string& prefix) const {
  projection.collect(out, prefix + ".projection");
  out.push_back({prefix + ".position", position});
}

ViTLayer ViTLayer::create(std::size_t dim, std::size_t heads, Rng& rng, std::size_t mlp_ratio) {
  ViTLayer layer;
  layer.norm_attention = LayerNorm::create(dim);
  layer.attention = MultiHeadSelfAttention::create(dim, heads, rng);
  layer.norm_mlp = LayerNorm::create(dim);
  layer.mlp_in = LinearLayer::create(dim, mlp_ratio * dim, rng);
  layer.mlp_out = LinearLayer::create(mlp_ratio * dim, dim, rng);
  return layer;
}

void ViTLayer::collect(ParameterList& out, const std::string& prefix) const {
  norm_attention.collect(out, prefix + ".norm_attention");
  attention.collect(out, prefix + ".attention");
  norm_mlp.collect(out, prefix + ".norm_mlp");
  mlp_in.collect(out, prefix + ".mlp_in");
  mlp_out.collect(out, prefix + ".mlp_out");
}

void ViTLayer::zero_residual_branches() {
  attention.output.zero();
  mlp_out.zero();
}

Tensor patchify(const Tensor& x, std::size_t patch) {
  if (x.rank() != 3) throw ShapeError("patchify expects C×H×W, got " + shape_str(x.shape()));
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (patch == 0 || h % patch != 0 || w % patch != 0) {
    throw ShapeError("extents " + shape_str(x.shape()) + " not divisible by patch size " +
                     std::to_string(patch));
  }
  const std::size_t gh = h / patch, gw = w / patch;
  const std::size_t features = c * patch * patch;
  // index[t·features + f] is the source element of token t, feature f.
  std::vector<std::size_t> index(gh * gw * features);
  for (std::size_t gy = 0; gy < gh; ++gy)
    for (std::size_t gx = 0; gx < gw; ++gx)
      for (std::size_t k = 0; k < c; ++k)
        for (std::size_t i = 0; i < patch; ++i)
          for (std::size_t j = 0; j < patch; ++j) {
            const std::size_t t = gy * gw + gx;
            const std::size_t f = (k * patch + i) * patch + j;
            index[t * features + f] = (k * h + gy * patch + i) * w + gx * patch + j;
          }
  Tensor out = Tensor::zeros({gh * gw, features});
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t n = 0; n < index.size(); ++n) po[n] = px[index[n]];
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [index = std::move(index)](std::span<const double> g, auto grads) {
      auto& gx = *grads[0];
      for (std::size_t n = 0; n < index.size(); ++n) gx[index[n]] += g[n];
    });
  }
  return out;
}

Tensor embed_patches(const Tensor& x, const PatchEmbedding& pe) {
  if (x.rank() != 3 || x.dim(0) != pe.channels || x.dim(1) != pe.grid_h * pe.patch ||
      x.dim(2) != pe.grid_w * pe.patch) {
    throw ShapeError("patch embedding expects " + std::to_string(pe.channels) + "×" +
                     std::to_string(pe.grid_h * pe.patch) + "×" +
                     std::to_string(pe.grid_w * pe.patch) + " input, got " +
                     shape_str(x.shape()));
  }
  return add(linear(patchify(x, pe.patch), pe.projection), pe.position);
}

Tensor vit_layer_forward(const Tensor& x, const ViTLayer& layer) {
  if (x.rank() != 2 || x.dim(1) != layer.dim()) {
    throw ShapeError("ViT layer expects T×" + std::to_string(layer.dim()) + " tokens, got " +
                     shape_str(x.shape()));
  }
  Tensor attended = add(mhsa(layernorm(x, layer.norm_attention), layer.attention), x);
  Tensor hidden = relu(linear(layernorm(attended, layer.norm_mlp), layer.mlp_in));
  return add(linear(hidden, layer.mlp_out), attended);
}

Tensor vit_stack_forward(const Tensor& x, std::span<const ViTLayer> layers) {
  Tensor h = x;
  for (const auto& layer : layers) h = vit_layer_forward(h, layer);
  return h;
}

Tensor tokens_to_map(const Tensor& tokens, std::size_t grid_h, std::size_t grid_w) {
  if (tokens.rank() != 2 || tokens.dim(0) != grid_h * grid_w) {
    throw ShapeError("cannot arrange tokens " + shape_str(tokens.shape()) + " on a " +
                     std::to_string(grid_h) + "×" + std::to_string(grid_w) + " grid");
  }
  return reshape(transpose(tokens), {tokens.dim(1), grid_h, grid_w});
}

Tensor map_to_tokens(const Tensor& map) {
  if (map.rank() != 3) throw ShapeError("map_to_tokens expects d×H×W, got " + shape_str(map.shape()));
  return transpose(reshape(map, {map.dim(0), map.dim(1) * map.dim(2)}));
}

}  // namespace urveda
