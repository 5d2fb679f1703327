#pragma once

// Losses, Adam, the mini-batch training loop with best-checkpoint tracking,
// and k-fold cross-validation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "urveda/dataset.h"
#include "urveda/network.h"

namespace urveda {

enum class LossMode { kCrossEntropy, kCrossEntropyDice };
enum class SplitMode { kCrossValidation, kSingle };

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 10;
  double learning_rate = 0.01;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  LossMode loss = LossMode::kCrossEntropy;
  SplitMode split = SplitMode::kCrossValidation;  // kSingle trains fold 0 only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Mean over pixels of −log softmax(logits)[truth]. logits: classes×H×W.
Tensor ce_loss(const Tensor& logits, const SegmentationMask& truth);
// 1 − mean over foreground classes of (2Σpt + 1)/(Σp + Σt + 1). probs: classes×H×W.
Tensor dice_loss(const Tensor& probs, const SegmentationMask& truth);
Tensor segmentation_loss(const Tensor& logits, const SegmentationMask& truth, LossMode mode);

struct AdamState {
  std::vector<std::string> names;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.01;

  static AdamState create(const ParameterList& params, double learning_rate, double beta1 = 0.9,
                          double beta2 = 0.999, double epsilon = 1e-8);
};

// One bias-corrected Adam update from the gradients accumulated on `params`.
// Throws AutodiffError when a parameter has no gradient.
void adam_step(const ParameterList& params, AdamState& state);

// Precomputed network inputs for one sample.
struct PreparedSample {
  const SliceSample* sample = nullptr;
  std::vector<EdgeMap> edges;
};
std::vector<PreparedSample> prepare_samples(std::span<const SliceSample> samples, const NetworkConfig& config);

// Mean of per-sample losses (no gradient recording).
double batch_loss(const URVedaModel& model, std::span<const PreparedSample> batch, LossMode mode);

// Mean foreground DSC of the argmax prediction against the truth.
double foreground_dsc(const SegmentationMask& pred, const SegmentationMask& truth);
double mean_validation_dsc(const URVedaModel& model, std::span<const PreparedSample> samples);
std::vector<SampleMetrics> evaluate_model(const URVedaModel& model, std::span<const SliceSample> samples);

struct EpochRecord {
  std::size_t epoch = 0;                  // 0 = before any update
  std::optional<double> train_loss;       // mean batch loss over the epoch
  double val_dsc = 0.0;
  double wall_seconds = 0.0;              // excluded from the deterministic log
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_dsc = 0.0;
  ParameterContainer best_checkpoint;
};

struct TrainOptions {
  // Line-delimited JSON, one record per epoch (epoch, train_loss, val_dsc).
  std::optional<std::filesystem::path> log_path;
  // Wall-clock seconds per epoch, kept apart so the log stays reproducible.
  std::optional<std::filesystem::path> timing_path;
  // Rewritten whenever the validation DSC improves.
  std::optional<std::filesystem::path> checkpoint_path;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Trains in place. Throws NumericError naming the epoch, batch and sample on a
// non-finite loss.
TrainingLog train(URVedaModel& model, std::span<const SliceSample> train_set,
                  std::span<const SliceSample> validation_set, const TrainConfig& config,
                  const TrainOptions& options = {});

struct FoldReport {
  std::size_t fold = 0;
  std::uint64_t init_seed = 0;
  std::vector<std::string> validation_ids;
  TrainingLog log;
};

struct CrossValidationReport {
  std::vector<FoldReport> folds;
  double mean_best_dsc = 0.0;
  double min_best_dsc = 0.0;
  double max_best_dsc = 0.0;
};

// Per-fold artifacts go to <out_dir>/fold_<f>/{train_log.jsonl,timing.jsonl,best.ckpt}
// when out_dir is given.
CrossValidationReport cross_validate(std::span<const SliceSample> samples, const NetworkConfig& network,
                                     const TrainConfig& config,
                                     const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                     const std::function<void(std::size_t, const EpochRecord&)>& on_epoch = {});

// Seeds used for fold f: model initialization and batch shuffling.
std::uint64_t fold_init_seed(std::uint64_t master, std::size_t fold);
std::uint64_t fold_shuffle_seed(std::uint64_t master, std::size_t fold);

}  // namespace urveda
