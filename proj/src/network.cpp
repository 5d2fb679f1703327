#include "urveda/network.h"

#include <string>

#include "urveda/json_io.h"

namespace urveda {

namespace {

std::string level_name(const char* stage, std::size_t level) {
  return std::string(stage) + "." + std::to_string(level);
}

Tensor interleaved_vit_forward(const Tensor& x, const InterleavedVit& block) {
  Tensor tokens = vit_layer_forward(embed_patches(x, block.embed), block.layer);
  Tensor map = tokens_to_map(tokens, block.embed.grid_h, block.embed.grid_w);
  return conv2d(upsample_nearest(map, block.embed.patch), block.project);
}

// Concat appends the edge map as one extra channel; multiply scales features by (1 + edge).
Tensor fuse_edge(const Tensor& features, const Tensor& edge, EdgeFusion mode) {
  return mode == EdgeFusion::kConcat ? concat({features, edge}, 0)
                                     : mul(features, add_scalar(edge, 1.0));
}

}  // namespace

void NetworkConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid network config: " + msg); };
  if (in_channels != 1) fail("in_channels must be 1 (grayscale input)");
  if (depth == 0) fail("depth must be at least 1");
  if (base_channels == 0) fail("base_channels must be positive");
  if (classes < 2) fail("classes must be at least 2");
  if (classes > 255) fail("classes must fit in 8-bit labels");
  if (vit_depth == 0) fail("vit_depth must be at least 1");
  if (embed_dim == 0 || patch == 0) fail("embed_dim and patch must be positive");
  if (heads == 0 || embed_dim % heads != 0) {
    fail("embed_dim " + std::to_string(embed_dim) + " not divisible by heads " +
         std::to_string(heads));
  }
  if (reduction == 0) fail("reduction must be positive");
  if (spatial_kernel % 2 == 0) fail("spatial_kernel must be odd");
  if (height == 0 || width == 0) fail("extents must be positive");
  const std::size_t factor = (std::size_t{1} << depth) * patch;
  if (height % factor != 0 || width % factor != 0) {
    fail("extents " + std::to_string(height) + "x" + std::to_string(width) +
         " must be divisible by 2^depth * patch = " + std::to_string(factor));
  }
  if (vit_placement == VitPlacement::kInterleaved) {
    for (std::size_t l = 0; l < depth; ++l) {
      if ((height >> l) % patch != 0 || (width >> l) % patch != 0) {
        fail("interleaved transformer patch does not tile level " + std::to_string(l));
      }
    }
  }
}

// ---------------------------------------------------------------- blocks

ResidualBlock ResidualBlock::create(std::size_t in_channels, std::size_t out_channels, Rng& rng,
                                    const NetworkConfig* attention_config) {
  ResidualBlock b;
  b.conv1 = Conv2dLayer::create(in_channels, out_channels, 3, rng);
  b.conv2 = Conv2dLayer::create(out_channels, out_channels, 3, rng);
  if (in_channels != out_channels) b.shortcut = Conv2dLayer::create(in_channels, out_channels, 1, rng);
  if (attention_config) {
    b.attention = DualAttentionModule::create(out_channels, attention_config->reduction,
                                              attention_config->spatial_kernel,
                                              attention_config->dam_mode, rng);
  }
  return b;
}

void ResidualBlock::collect(ParameterList& out, const std::string& prefix) const {
  conv1.collect(out, prefix + ".conv1");
  conv2.collect(out, prefix + ".conv2");
  if (shortcut) shortcut->collect(out, prefix + ".shortcut");
  if (attention) attention->collect(out, prefix + ".attention");
}

Tensor residual_block_forward(const Tensor& x, const ResidualBlock& block) {
  Tensor branch = conv2d(relu(conv2d(x, block.conv1)), block.conv2);
  if (block.attention) branch = dam_forward(branch, branch, branch, *block.attention);
  return add(branch, block.shortcut ? conv2d(x, *block.shortcut) : x);
}

void InterleavedVit::collect(ParameterList& out, const std::string& prefix) const {
  embed.collect(out, prefix + ".embed");
  layer.collect(out, prefix + ".layer");
  project.collect(out, prefix + ".project");
}

// ---------------------------------------------------------------- model

URVedaModel URVedaModel::create(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  URVedaModel m(config);
  const std::size_t depth = config.depth;
  const std::size_t edge_channels = config.edge_fusion == EdgeFusion::kConcat ? 1 : 0;

  std::size_t in = config.in_channels;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t c = config.channels_at(l);
    m.encoder.push_back(ResidualBlock::create(in, c, rng, &config));
    if (config.vit_placement == VitPlacement::kInterleaved) {
      InterleavedVit iv;
      iv.embed = PatchEmbedding::create(c, config.patch, config.embed_dim,
                                        (config.height >> l) / config.patch,
                                        (config.width >> l) / config.patch, rng);
      iv.layer = ViTLayer::create(config.embed_dim, config.heads, rng);
      iv.project = Conv2dLayer::create(config.embed_dim, c, 1, rng);
      m.encoder_vit.push_back(std::move(iv));
    }
    in = c;
  }

  const std::size_t bottleneck = config.channels_at(depth);
  const std::size_t bh = config.height >> depth, bw = config.width >> depth;
  m.bottleneck_in =
      Conv2dLayer::create(config.channels_at(depth - 1) + edge_channels, bottleneck, 1, rng);
  m.embed = PatchEmbedding::create(bottleneck, config.patch, config.embed_dim, bh / config.patch,
                                   bw / config.patch, rng);
  for (std::size_t i = 0; i < config.vit_depth; ++i)
    m.vit.push_back(ViTLayer::create(config.embed_dim, config.heads, rng));
  m.bottleneck_out = Conv2dLayer::create(config.embed_dim, bottleneck, 1, rng);

  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t c = config.channels_at(l);
    m.up.push_back(Conv2dLayer::create(config.channels_at(l + 1), c, 3, rng));
    m.skip_attention.push_back(DualAttentionModule::create(c, config.reduction,
                                                           config.spatial_kernel,
                                                           config.dam_mode, rng));
    m.decoder.push_back(ResidualBlock::create(2 * c + edge_channels, c, rng));
  }
  m.head = Conv2dLayer::create(config.channels_at(0), config.classes, 1, rng);
  return m;
}

ParameterList URVedaModel::parameters() const {
  ParameterList out;
  for (std::size_t l = 0; l < encoder.size(); ++l) encoder[l].collect(out, level_name("encoder", l));
  for (std::size_t l = 0; l < encoder_vit.size(); ++l)
    encoder_vit[l].collect(out, level_name("encoder_vit", l));
  bottleneck_in.collect(out, "bottleneck_in");
  embed.collect(out, "embed");
  for (std::size_t i = 0; i < vit.size(); ++i) vit[i].collect(out, level_name("vit", i));
  bottleneck_out.collect(out, "bottleneck_out");
  for (std::size_t l = 0; l < up.size(); ++l) up[l].collect(out, level_name("up", l));
  for (std::size_t l = 0; l < skip_attention.size(); ++l)
    skip_attention[l].collect(out, level_name("skip_attention", l));
  for (std::size_t l = 0; l < decoder.size(); ++l) decoder[l].collect(out, level_name("decoder", l));
  head.collect(out, "head");
  return out;
}

std::vector<std::size_t> URVedaModel::encoder_channels() const {
  std::vector<std::size_t> channels;
  for (const auto& block : encoder) channels.push_back(block.conv2.out_channels());
  return channels;
}

Tensor URVedaModel::forward(const Tensor& x) const {
  if (x.rank() != 3) throw ShapeError("model input must be 1×H×W, got " + shape_str(x.shape()));
  return forward(x, edge_pyramid(x.detach(), config_.depth + 1));
}

Tensor URVedaModel::forward(const Tensor& x, std::span<const EdgeMap> edges) const {
  const NetworkConfig& cfg = config_;
  if (x.shape() != Shape{cfg.in_channels, cfg.height, cfg.width}) {
    throw ShapeError("model configured for " +
                     shape_str({cfg.in_channels, cfg.height, cfg.width}) + " input, got " +
                     shape_str(x.shape()));
  }
  if (edges.size() != cfg.depth + 1) {
    throw ShapeError("expected " + std::to_string(cfg.depth + 1) + " edge levels, got " +
                     std::to_string(edges.size()));
  }
  for (std::size_t l = 0; l <= cfg.depth; ++l) {
    const Shape want{1, cfg.height >> l, cfg.width >> l};
    if (edges[l].values.shape() != want) {
      throw ShapeError("edge level " + std::to_string(l) + " has shape " +
                       shape_str(edges[l].values.shape()) + ", expected " + shape_str(want));
    }
  }

  std::vector<Tensor> skips;
  Tensor h = x;
  for (std::size_t l = 0; l < cfg.depth; ++l) {
    Tensor s = residual_block_forward(h, encoder[l]);
    if (!encoder_vit.empty()) s = add(s, interleaved_vit_forward(s, encoder_vit[l]));
    s.check_finite(level_name("encoder", l));
    skips.push_back(s);
    h = maxpool2d(s);
  }

  Tensor b = conv2d(fuse_edge(h, edges[cfg.depth].values, cfg.edge_fusion), bottleneck_in);
  Tensor tokens = vit_stack_forward(embed_patches(b, embed), vit);
  tokens.check_finite("vit");
  Tensor global = conv2d(
      upsample_nearest(tokens_to_map(tokens, embed.grid_h, embed.grid_w), embed.patch),
      bottleneck_out);
  Tensor g = add(b, global);
  g.check_finite("bottleneck");

  for (std::size_t l = cfg.depth; l-- > 0;) {
    Tensor u = relu(conv2d(upsample2x(g), up[l]));
    Tensor refined = dam_forward(skips[l], skips[l], u, skip_attention[l]);
    Tensor skip = fuse_edge(refined, edges[l].values, cfg.edge_fusion);
    g = residual_block_forward(concat({skip, u}, 0), decoder[l]);
    g.check_finite(level_name("decoder", l));
  }
  Tensor logits = conv2d(g, head);
  logits.check_finite("head");
  return logits;
}

// ---------------------------------------------------------------- helpers

SegmentationMask predict_mask(const Tensor& logits) {
  if (logits.rank() != 3) {
    throw ShapeError("logits must be classes×H×W, got " + shape_str(logits.shape()));
  }
  const std::size_t classes = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
  SegmentationMask mask = SegmentationMask::zeros(h, w, classes);
  auto p = logits.data();
  const std::size_t plane = h * w;
  for (std::size_t i = 0; i < plane; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (p[c * plane + i] > p[best * plane + i]) best = c;
    mask.labels[i] = static_cast<std::uint8_t>(best);
  }
  return mask;
}

std::size_t count_parameters(const ParameterList& params) { return count_elements(params); }
std::size_t count_parameters(const URVedaModel& model) {
  return count_parameters(model.parameters());
}

ParameterContainer make_checkpoint(const URVedaModel& model) {
  nlohmann::json meta;
  meta["format"] = "urveda-checkpoint";
  meta["network"] = to_json(model.config());
  return snapshot_parameters(model.parameters(), meta.dump());
}

URVedaModel model_from_checkpoint(const ParameterContainer& checkpoint) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(checkpoint.metadata);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  if (!meta.is_object() || meta.value("format", "") != "urveda-checkpoint" ||
      !meta.contains("network")) {
    throw DataError("parameter container is not a model checkpoint");
  }
  URVedaModel model = URVedaModel::create(network_config_from_json(meta["network"]), 0);
  ParameterList params = model.parameters();
  restore_parameters(params, checkpoint);
  return model;
}

void save_checkpoint(const URVedaModel& model, const std::filesystem::path& path) {
  save_container(path, make_checkpoint(model));
}

URVedaModel load_checkpoint(const std::filesystem::path& path) {
  return model_from_checkpoint(load_container(path));
}

}  // namespace urveda
