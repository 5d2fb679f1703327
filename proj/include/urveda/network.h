#pragma once

// UNet-style segmentation network: residual conv blocks with embedded dual
// attention, a transformer stack at the bottleneck (optionally also after every
// encoder block), and skip connections carrying attention-refined encoder
// features plus an edge channel.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "urveda/attention.h"
#include "urveda/edge.h"
#include "urveda/metrics.h"
#include "urveda/nn.h"
#include "urveda/serialize.h"
#include "urveda/vit.h"

namespace urveda {

enum class VitPlacement { kBottleneck, kInterleaved };
enum class EdgeFusion { kConcat, kMultiply };

struct NetworkConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t in_channels = 1;
  std::size_t depth = 3;
  std::size_t base_channels = 8;
  std::size_t classes = kCardiacClasses;
  std::size_t vit_depth = 4;
  std::size_t embed_dim = 128;
  std::size_t patch = 2;
  std::size_t heads = 4;
  std::size_t reduction = 4;       // channel-attention MLP reduction ratio
  std::size_t spatial_kernel = 7;  // spatial-attention conv kernel
  VitPlacement vit_placement = VitPlacement::kBottleneck;
  DamMode dam_mode = DamMode::kSequential;
  EdgeFusion edge_fusion = EdgeFusion::kConcat;

  // Throws ConfigError naming the violated constraint.
  void validate() const;
  // Channels of encoder level `level` (base · 2^level); level == depth is the bottleneck.
  std::size_t channels_at(std::size_t level) const { return base_channels << level; }
  bool operator==(const NetworkConfig&) const = default;
};

struct ResidualBlock {
  Conv2dLayer conv1;
  Conv2dLayer conv2;
  std::optional<Conv2dLayer> shortcut;  // 1×1 when channel counts differ
  std::optional<DualAttentionModule> attention;

  static ResidualBlock create(std::size_t in_channels, std::size_t out_channels, Rng& rng,
                              const NetworkConfig* attention_config = nullptr);
  void collect(ParameterList& out, const std::string& prefix) const;
};

// out = attend(conv2(relu(conv1(x)))) + shortcut(x), where attend is the
// embedded dual attention (with Fe = Fd = the branch) when present.
Tensor residual_block_forward(const Tensor& x, const ResidualBlock& block);

// Transformer block applied to a feature map at its own resolution.
struct InterleavedVit {
  PatchEmbedding embed;
  ViTLayer layer;
  Conv2dLayer project;  // d → C, 1×1

  void collect(ParameterList& out, const std::string& prefix) const;
};

class URVedaModel {
 public:
  static URVedaModel create(const NetworkConfig& config, std::uint64_t seed);

  URVedaModel(URVedaModel&&) = default;
  URVedaModel& operator=(URVedaModel&&) = default;
  // Parameters are shared handles; copying would alias them.
  URVedaModel(const URVedaModel&) = delete;
  URVedaModel& operator=(const URVedaModel&) = delete;

  const NetworkConfig& config() const { return config_; }
  ParameterList parameters() const;
  std::vector<std::size_t> encoder_channels() const;

  // x: 1×H×W. Returns classes×H×W logits.
  Tensor forward(const Tensor& x) const;
  // `edges` must hold depth+1 levels matching the encoder resolutions.
  Tensor forward(const Tensor& x, std::span<const EdgeMap> edges) const;

  std::vector<ResidualBlock> encoder;
  std::vector<InterleavedVit> encoder_vit;  // empty in bottleneck placement
  Conv2dLayer bottleneck_in;                // EL: C_{depth-1} (+edge) → C_depth
  PatchEmbedding embed;
  std::vector<ViTLayer> vit;
  Conv2dLayer bottleneck_out;  // EL: d → C_depth
  std::vector<Conv2dLayer> up;  // per decoder level, C_{l+1} → C_l
  std::vector<DualAttentionModule> skip_attention;
  std::vector<ResidualBlock> decoder;
  Conv2dLayer head;

 private:
  explicit URVedaModel(NetworkConfig config) : config_(std::move(config)) {}
  NetworkConfig config_;
};

// Per-pixel argmax over classes; ties go to the lower class index.
SegmentationMask predict_mask(const Tensor& logits);

std::size_t count_parameters(const ParameterList& params);
std::size_t count_parameters(const URVedaModel& model);

// Checkpoint = parameter container whose metadata embeds the NetworkConfig.
ParameterContainer make_checkpoint(const URVedaModel& model);
URVedaModel model_from_checkpoint(const ParameterContainer& checkpoint);
void save_checkpoint(const URVedaModel& model, const std::filesystem::path& path);
URVedaModel load_checkpoint(const std::filesystem::path& path);

}  // namespace urveda
