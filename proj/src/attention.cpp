#include "urveda/attention.h"

#include <algorithm>
#include <cmath>

namespace urveda {

ChannelAttention ChannelAttention::create(std::size_t channels, std::size_t reduction,
                                          Rng& rng) {
  const std::size_t hidden = std::max<std::size_t>(1, channels / std::max<std::size_t>(1, reduction));
  return {LinearLayer::create(channels, hidden, rng), LinearLayer::create(hidden, channels, rng)};
}

void ChannelAttention::collect(ParameterList& out, const std::string& prefix) const {
  reduce.collect(out, prefix + ".reduce");
  expand.collect(out, prefix + ".expand");
}

void ChannelAttention::zero() {
  reduce.zero();
  expand.zero();
}

SpatialAttention SpatialAttention::create(std::size_t kernel, Rng& rng) {
  if (kernel % 2 == 0) throw ConfigError("spatial attention kernel must be odd");
  return {Conv2dLayer::create(2, 1, kernel, rng)};
}

void SpatialAttention::collect(ParameterList& out, const std::string& prefix) const {
  conv.collect(out, prefix + ".conv");
}

void SpatialAttention::zero() { conv.zero(); }

DualAttentionModule DualAttentionModule::create(std::size_t channels, std::size_t reduction,
                                                std::size_t spatial_kernel, DamMode mode,
                                                Rng& rng) {
  DualAttentionModule dam;
  dam.fusion = Conv2dLayer::create(2 * channels, channels, 1, rng);
  dam.channel = ChannelAttention::create(channels, reduction, rng);
  dam.spatial = SpatialAttention::create(spatial_kernel, rng);
  dam.mode = mode;
  return dam;
}

void DualAttentionModule::collect(ParameterList& out, const std::string& prefix) const {
  fusion.collect(out, prefix + ".fusion");
  channel.collect(out, prefix + ".channel");
  spatial.collect(out, prefix + ".spatial");
}

void DualAttentionModule::zero() {
  fusion.zero();
  channel.zero();
  spatial.zero();
}

Tensor channel_attention(const Tensor& fused, const ChannelAttention& cam) {
  if (fused.rank() != 3 || fused.dim(0) != cam.channels()) {
    throw ShapeError("channel attention configured for " + std::to_string(cam.channels()) +
                     " channels, got input " + shape_str(fused.shape()));
  }
  const std::size_t c = fused.dim(0);
  Tensor avg = reshape(mean(fused, {1, 2}), {1, c});
  Tensor mx = reshape(max(fused, {1, 2}), {1, c});
  // Both descriptors go through the shared perceptron as two rows.
  Tensor hidden = relu(linear(concat({avg, mx}, 0), cam.reduce));
  Tensor logits = sum(linear(hidden, cam.expand), {0});
  return reshape(sigmoid(logits), {c, 1, 1});
}

Tensor spatial_attention(const Tensor& fused, const SpatialAttention& sam) {
  if (fused.rank() != 3) {
    throw ShapeError("spatial attention expects C×H×W, got " + shape_str(fused.shape()));
  }
  Tensor descriptors = concat({mean(fused, {0}, true), max(fused, {0}, true)}, 0);
  return sigmoid(conv2d(descriptors, sam.conv));
}

Tensor dam_forward(const Tensor& f, const Tensor& fe, const Tensor& fd,
                   const DualAttentionModule& dam, AttentionMaps* maps) {
  if (f.shape() != fe.shape() || f.shape() != fd.shape()) {
    throw ShapeError("dual attention inputs must share a shape: F " + shape_str(f.shape()) +
                     ", Fe " + shape_str(fe.shape()) + ", Fd " + shape_str(fd.shape()));
  }
  if (f.rank() != 3 || f.dim(0) != dam.channels()) {
    throw ShapeError("dual attention configured for " + std::to_string(dam.channels()) +
                     " channels, got " + shape_str(f.shape()));
  }
  Tensor fused = conv2d(concat({fe, fd}, 0), dam.fusion);
  Tensor mc = channel_attention(fused, dam.channel);
  Tensor ms = dam.mode == DamMode::kSequential ? spatial_attention(mul(mc, fused), dam.spatial)
                                               : spatial_attention(fused, dam.spatial);
  if (maps) *maps = {mc, ms};
  return mul(ms, mul(mc, f));
}

MultiHeadSelfAttention MultiHeadSelfAttention::create(std::size_t dim, std::size_t heads,
                                                      Rng& rng) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("attention dim " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  MultiHeadSelfAttention m;
  m.heads = heads;
  m.query = LinearLayer::create(dim, dim, rng, false);
  m.key = LinearLayer::create(dim, dim, rng, false);
  m.value = LinearLayer::create(dim, dim, rng, false);
  m.output = LinearLayer::create(dim, dim, rng, false);
  return m;
}

void MultiHeadSelfAttention::collect(ParameterList& out, const std::string& prefix) const {
  query.collect(out, prefix + ".query");
  key.collect(out, prefix + ".key");
  value.collect(out, prefix + ".value");
  output.collect(out, prefix + ".output");
}

Tensor mhsa(const Tensor& x, const MultiHeadSelfAttention& layer, std::vector<Tensor>* attention) {
  const std::size_t d = layer.dim();
  if (layer.heads == 0 || d % layer.heads != 0) {
    throw ConfigError("attention dim " + std::to_string(d) + " is not divisible by " +
                      std::to_string(layer.heads) + " heads");
  }
  if (x.rank() != 2 || x.dim(1) != d) {
    throw ShapeError("mhsa expects T×" + std::to_string(d) + " tokens, got " +
                     shape_str(x.shape()));
  }
  const std::size_t head_dim = d / layer.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Tensor q = linear(x, layer.query);
  Tensor k = linear(x, layer.key);
  Tensor v = linear(x, layer.value);
  std::vector<Tensor> heads;
  if (attention) attention->clear();
  for (std::size_t h = 0; h < layer.heads; ++h) {
    const std::size_t start = h * head_dim;
    Tensor scores =
        scale(matmul(narrow(q, 1, start, head_dim), transpose(narrow(k, 1, start, head_dim))),
              inv_sqrt);
    Tensor weights = softmax(scores, 1);
    if (attention) attention->push_back(weights);
    heads.push_back(matmul(weights, narrow(v, 1, start, head_dim)));
  }
  return linear(concat(heads, 1), layer.output);
}

}  // namespace urveda
