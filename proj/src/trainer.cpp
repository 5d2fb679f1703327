#include "urveda/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "urveda/errors.h"
#include "urveda/random.h"

namespace urveda {

namespace {

constexpr std::uint64_t kInitStream = 0x1000;
constexpr std::uint64_t kShuffleStream = 0x2000;

void check_truth(const Tensor& t, const SegmentationMask& truth, const char* what) {
  if (t.rank() != 3 || t.dim(1) != truth.height || t.dim(2) != truth.width) {
    throw ShapeError(std::string(what) + " shape " + shape_str(t.shape()) + " does not match a " +
                     std::to_string(truth.height) + "x" + std::to_string(truth.width) + " mask");
  }
  const std::size_t classes = t.dim(0);
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    if (truth.labels[i] >= classes) {
      throw DataError("label " + std::to_string(truth.labels[i]) + " at pixel " + std::to_string(i) +
                      " is outside the " + std::to_string(classes) + " predicted classes");
    }
  }
}

Tensor one_hot(const SegmentationMask& truth, std::size_t classes) {
  const std::size_t plane = truth.height * truth.width;
  std::vector<double> v(classes * plane, 0.0);
  for (std::size_t i = 0; i < plane; ++i) v[truth.labels[i] * plane + i] = 1.0;
  return Tensor({classes, truth.height, truth.width}, std::move(v));
}

void append_line(const std::optional<std::filesystem::path>& path, const nlohmann::json& record) {
  if (!path) return;
  std::ofstream out(*path, std::ios::app);
  if (!out) throw DataError("cannot append to " + path->string());
  out << record.dump() << '\n';
}

void truncate_file(const std::optional<std::filesystem::path>& path) {
  if (!path) return;
  if (path->has_parent_path()) std::filesystem::create_directories(path->parent_path());
  std::ofstream out(*path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path->string());
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (split == SplitMode::kCrossValidation && folds < 2) throw ConfigError("folds must be at least 2");
  if (split == SplitMode::kSingle && folds < 2) throw ConfigError("folds must be at least 2 (the single split uses fold 0)");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

Tensor ce_loss(const Tensor& logits, const SegmentationMask& truth) {
  check_truth(logits, truth, "logits");
  const Tensor target = one_hot(truth, logits.dim(0));
  const double pixels = static_cast<double>(truth.height * truth.width);
  return scale(sum(mul(target, log_softmax(logits, 0))), -1.0 / pixels);
}

Tensor dice_loss(const Tensor& probs, const SegmentationMask& truth) {
  check_truth(probs, truth, "probabilities");
  const std::size_t classes = probs.dim(0);
  if (classes < 2) throw ShapeError("dice loss needs at least one foreground class");
  const Tensor target = one_hot(truth, classes);
  const Tensor inter = narrow(sum(mul(probs, target), {1, 2}), 0, 1, classes - 1);
  const Tensor p_sum = narrow(sum(probs, {1, 2}), 0, 1, classes - 1);
  const Tensor t_sum = narrow(sum(target, {1, 2}), 0, 1, classes - 1);
  const Tensor ratio = div(add_scalar(scale(inter, 2.0), 1.0), add_scalar(add(p_sum, t_sum), 1.0));
  return add_scalar(neg(mean(ratio)), 1.0);
}

Tensor segmentation_loss(const Tensor& logits, const SegmentationMask& truth, LossMode mode) {
  Tensor loss = ce_loss(logits, truth);
  if (mode == LossMode::kCrossEntropyDice) loss = add(loss, dice_loss(softmax(logits, 0), truth));
  return loss;
}

AdamState AdamState::create(const ParameterList& params, double learning_rate, double beta1, double beta2,
                            double epsilon) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  for (const auto& p : params) {
    s.names.push_back(p.name);
    s.m.emplace_back(p.tensor.numel(), 0.0);
    s.v.emplace_back(p.tensor.numel(), 0.0);
  }
  return s;
}

void adam_step(const ParameterList& params, AdamState& state) {
  if (params.size() != state.m.size()) {
    throw ShapeError("optimizer state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != state.names[i] || params[i].tensor.numel() != state.m[i].size()) {
      throw ShapeError("optimizer state does not match parameter " + params[i].name);
    }
    if (!params[i].tensor.has_grad()) throw AutodiffError("parameter " + params[i].name + " has no gradient");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i].tensor;
    const auto g = p.grad();
    auto theta = p.mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      theta[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

std::vector<PreparedSample> prepare_samples(std::span<const SliceSample> samples, const NetworkConfig& config) {
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const SliceSample& s : samples) {
    if (s.mask.height != config.height || s.mask.width != config.width) {
      throw DataError(s.id + ": sample extents " + std::to_string(s.mask.height) + "x" +
                      std::to_string(s.mask.width) + " differ from the network's " +
                      std::to_string(config.height) + "x" + std::to_string(config.width));
    }
    out.push_back({&s, edge_pyramid(s.image, config.depth + 1)});
  }
  return out;
}

double batch_loss(const URVedaModel& model, std::span<const PreparedSample> batch, LossMode mode) {
  double total = 0.0;
  for (const auto& p : batch) {
    total += segmentation_loss(model.forward(p.sample->image, p.edges), p.sample->mask, mode).item();
  }
  return total / static_cast<double>(batch.size());
}

double foreground_dsc(const SegmentationMask& pred, const SegmentationMask& truth) {
  const std::size_t classes = std::max(pred.classes, truth.classes);
  double total = 0.0;
  for (std::size_t l = 1; l < classes; ++l) {
    total += dsc(binarize(pred, static_cast<std::uint8_t>(l)), binarize(truth, static_cast<std::uint8_t>(l)));
  }
  return classes > 1 ? total / static_cast<double>(classes - 1) : 1.0;
}

double mean_validation_dsc(const URVedaModel& model, std::span<const PreparedSample> samples) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : samples) {
    total += foreground_dsc(predict_mask(model.forward(p.sample->image, p.edges)), p.sample->mask);
  }
  return total / static_cast<double>(samples.size());
}

std::vector<SampleMetrics> evaluate_model(const URVedaModel& model, std::span<const SliceSample> samples) {
  std::vector<SampleMetrics> out;
  for (const SliceSample& s : samples) {
    SegmentationMask pred = predict_mask(model.forward(s.image));
    pred.spacing = s.mask.spacing;
    out.push_back({s.id, s.provenance.phase, evaluate(pred, s.mask)});
  }
  return out;
}

TrainingLog train(URVedaModel& model, std::span<const SliceSample> train_set,
                  std::span<const SliceSample> validation_set, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  if (config.batch_size > train_set.size()) {
    throw ConfigError("batch_size " + std::to_string(config.batch_size) + " exceeds the " +
                      std::to_string(train_set.size()) + " training samples");
  }
  const auto train_prepared = prepare_samples(train_set, model.config());
  const auto val_prepared = prepare_samples(validation_set, model.config());
  ParameterList params = model.parameters();
  AdamState adam = AdamState::create(params, config.learning_rate, config.beta1, config.beta2, config.epsilon);
  Rng shuffle_rng(config.seed);
  std::vector<std::size_t> order(train_prepared.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  truncate_file(options.log_path);
  truncate_file(options.timing_path);
  TrainingLog log;
  auto finish_epoch = [&](EpochRecord rec) {
    nlohmann::json line = {{"epoch", rec.epoch}, {"val_dsc", rec.val_dsc}};
    line["train_loss"] = rec.train_loss ? nlohmann::json(*rec.train_loss) : nlohmann::json(nullptr);
    append_line(options.log_path, line);
    append_line(options.timing_path, {{"epoch", rec.epoch}, {"wall_seconds", rec.wall_seconds}});
    if (rec.epoch == 0 || rec.val_dsc > log.best_val_dsc) {
      log.best_epoch = rec.epoch;
      log.best_val_dsc = rec.val_dsc;
      log.best_checkpoint = make_checkpoint(model);
      if (options.checkpoint_path) save_container(*options.checkpoint_path, log.best_checkpoint);
    }
    if (options.on_epoch) options.on_epoch(rec);
    log.epochs.push_back(std::move(rec));
  };

  using Clock = std::chrono::steady_clock;
  auto start = Clock::now();
  finish_epoch({0, std::nullopt, mean_validation_dsc(model, val_prepared),
                std::chrono::duration<double>(Clock::now() - start).count()});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    start = Clock::now();
    shuffle_rng.shuffle(order);
    double loss_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - begin);
      zero_grads(params);
      double batch_total = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const PreparedSample& p = train_prepared[order[i]];
        Tape tape;
        TapeScope scope(tape);
        const Tensor loss = segmentation_loss(model.forward(p.sample->image, p.edges), p.sample->mask, config.loss);
        if (!std::isfinite(loss.item())) {
          throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batches) + " (sample " + p.sample->id + ")");
        }
        backward(scale(loss, inv_b));
        batch_total += loss.item() * inv_b;
      }
      adam_step(params, adam);
      loss_total += batch_total;
      ++batches;
    }
    finish_epoch({epoch, loss_total / static_cast<double>(batches), mean_validation_dsc(model, val_prepared),
                  std::chrono::duration<double>(Clock::now() - start).count()});
  }
  return log;
}

std::uint64_t fold_init_seed(std::uint64_t master, std::size_t fold) {
  return derive_seed(master, kInitStream + fold);
}

std::uint64_t fold_shuffle_seed(std::uint64_t master, std::size_t fold) {
  return derive_seed(master, kShuffleStream + fold);
}

CrossValidationReport cross_validate(std::span<const SliceSample> samples, const NetworkConfig& network,
                                     const TrainConfig& config, const std::optional<std::filesystem::path>& out_dir,
                                     const std::function<void(std::size_t, const EpochRecord&)>& on_epoch) {
  config.validate();
  network.validate();
  const std::vector<Fold> folds = kfold_split(samples.size(), config.folds, config.seed);
  const std::size_t runs = config.split == SplitMode::kSingle ? 1 : folds.size();
  CrossValidationReport report;
  for (std::size_t f = 0; f < runs; ++f) {
    std::vector<SliceSample> train_set, val_set;
    for (std::size_t i : folds[f].train) train_set.push_back(samples[i]);
    for (std::size_t i : folds[f].validation) val_set.push_back(samples[i]);

    FoldReport fr;
    fr.fold = f;
    fr.init_seed = fold_init_seed(config.seed, f);
    for (const auto& s : val_set) fr.validation_ids.push_back(s.id);
    TrainConfig fold_cfg = config;
    fold_cfg.seed = fold_shuffle_seed(config.seed, f);
    TrainOptions opts;
    if (out_dir) {
      const auto dir = *out_dir / ("fold_" + std::to_string(f));
      opts.log_path = dir / "train_log.jsonl";
      opts.timing_path = dir / "timing.jsonl";
      opts.checkpoint_path = dir / "best.ckpt";
    }
    if (on_epoch) opts.on_epoch = [&, f](const EpochRecord& r) { on_epoch(f, r); };
    URVedaModel model = URVedaModel::create(network, fr.init_seed);
    fr.log = train(model, train_set, val_set, fold_cfg, opts);
    report.folds.push_back(std::move(fr));
  }
  double total = 0.0;
  report.min_best_dsc = report.folds.front().log.best_val_dsc;
  report.max_best_dsc = report.min_best_dsc;
  for (const auto& fr : report.folds) {
    total += fr.log.best_val_dsc;
    report.min_best_dsc = std::min(report.min_best_dsc, fr.log.best_val_dsc);
    report.max_best_dsc = std::max(report.max_best_dsc, fr.log.best_val_dsc);
  }
  report.mean_best_dsc = total / static_cast<double>(report.folds.size());
  return report;
}

}  // namespace urveda
