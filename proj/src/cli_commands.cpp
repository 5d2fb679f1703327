#include "urveda/cli_commands.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "urveda/errors.h"
#include "urveda/nifti.h"
#include "urveda/phantom.h"
#include "urveda/random.h"
#include "urveda/serialize.h"

namespace urveda::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kRunManifestName = "run_manifest.json";

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path sibling(const fs::path& file, const std::string& suffix) {
  fs::path p = file;
  p += suffix;
  return p;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// "ED"/"ES" when the id carries that token (split on '_' or '-'), else "unknown".
std::string phase_from_id(const std::string& id) {
  std::string token;
  std::string found;
  auto flush = [&]() {
    std::string upper = token;
    for (char& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (upper == "ED" || upper == "ES") found = upper;
    token.clear();
  };
  for (char ch : id) {
    if (ch == '_' || ch == '-') {
      flush();
    } else {
      token += ch;
    }
  }
  flush();
  return found.empty() ? "unknown" : found;
}

std::string slice_id(const std::string& volume_id, std::size_t slice) {
  std::ostringstream os;
  os << volume_id << "_s";
  os.width(3);
  os.fill('0');
  os << slice;
  return os.str();
}

Image2D image_from_gray(const Gray8& g) { return {g.height, g.width, {g.pixels.begin(), g.pixels.end()}}; }

void check_requested_size(const std::optional<std::pair<std::size_t, std::size_t>>& size, const NetworkConfig& cfg,
                          const fs::path& checkpoint) {
  if (size && (size->first != cfg.height || size->second != cfg.width)) {
    throw DataError("checkpoint " + checkpoint.string() + " expects " + std::to_string(cfg.height) + "x" +
                    std::to_string(cfg.width) + " inputs but --size requested " + std::to_string(size->first) +
                    "x" + std::to_string(size->second));
  }
}

void write_label_map(const fs::path& path, const SegmentationMask& mask) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (path.extension() == ".nii") {
    write_mask_nifti(path, mask);
  } else {
    write_file_bytes(path, encode_pgm({mask.height, mask.width, mask.labels}));
  }
}

std::optional<fs::path> find_prediction(const fs::path& dir, const std::string& id) {
  for (const char* suffix : {".nii", "_pred.nii", "_gt.nii", ".pgm", "_pred.pgm"}) {
    const fs::path p = dir / (id + suffix);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kUsage;
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return kNumericFailure;
  return kDataFailure;
}

json to_json(const RunManifest& m) {
  return {{"command", m.command},
          {"argv", m.argv},
          {"config", m.config},
          {"inputs", m.inputs},
          {"outputs", m.outputs},
          {"seed", m.seed ? json(*m.seed) : json(nullptr)},
          {"tool_version", m.tool_version}};
}

void write_run_manifest(const fs::path& path, const RunManifest& manifest) { write_json(path, to_json(manifest)); }

Tensor load_input_image(const fs::path& path, std::size_t slice, std::size_t height, std::size_t width) {
  if (path.extension() == ".pgm") {
    if (slice != 0) throw ConfigError("--slice applies to NIfTI inputs only");
    return normalize_resize(image_from_gray(decode_pgm(read_file_bytes(path))), height, width);
  }
  const Volume v = read_nifti1_file(path);
  if (slice >= v.planes()) {
    throw DataError(path.string() + " has " + std::to_string(v.planes()) + " slices; slice " +
                    std::to_string(slice) + " requested");
  }
  return normalize_resize(slice_volume(v)[slice].image, height, width);
}

std::array<std::uint8_t, 3> class_color(std::uint8_t label) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 6> kColors = {{
      {255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {255, 255, 0}, {255, 0, 255}, {0, 255, 255}}};
  if (label == 0) throw std::invalid_argument("background has no contour color");
  return kColors[(label - 1) % kColors.size()];
}

Rgb8 render_overlay(const Gray8& image, const SegmentationMask& mask) {
  if (image.height != mask.height || image.width != mask.width) {
    throw ShapeError("overlay image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                     " and mask " + std::to_string(mask.height) + "x" + std::to_string(mask.width) + " differ");
  }
  Rgb8 out{image.height, image.width, std::vector<std::uint8_t>(3 * image.pixels.size())};
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = image.pixels[i];
  }
  for (std::size_t label = 1; label < mask.classes; ++label) {
    const auto l = static_cast<std::uint8_t>(label);
    const auto color = class_color(l);
    for (const Point& p : boundary_points(binarize(mask, l))) {
      const auto i = static_cast<std::size_t>(p.row) * image.width + static_cast<std::size_t>(p.col);
      std::copy(color.begin(), color.end(), out.pixels.begin() + static_cast<std::ptrdiff_t>(3 * i));
    }
  }
  return out;
}

int cmd_preprocess(const PreprocessArgs& args, const std::vector<std::string>& argv, Console console) {
  if (!fs::is_directory(args.input)) throw ConfigError("input directory not found: " + args.input.string());
  if (args.height == 0 || args.width == 0) throw ConfigError("--size extents must be positive");

  RunManifest run;
  run.command = "preprocess";
  run.argv = argv;
  run.config = {{"height", args.height}, {"width", args.width}, {"classes", args.classes}, {"folds", args.folds}};
  run.seed = args.seed;
  run.inputs["input"] = args.input.string();
  run.outputs["manifest"] = (args.output / "manifest.json").string();
  fs::create_directories(args.output);
  write_run_manifest(args.output / kRunManifestName, run);

  std::map<std::string, fs::path> images, masks;
  for (const auto& entry : fs::directory_iterator(args.input)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (ends_with(name, ".nii.gz")) {
      throw NiftiError(NiftiError::Kind::kCompressed,
                       entry.path().string() + ": compressed NIfTI is not supported; decompress it first (gunzip)");
    }
    if (!ends_with(name, ".nii")) continue;
    const std::string stem = name.substr(0, name.size() - 4);
    if (ends_with(stem, "_gt")) {
      masks[stem.substr(0, stem.size() - 3)] = entry.path();
    } else {
      images[stem] = entry.path();
    }
  }
  for (const auto& [id, path] : masks) {
    if (!images.contains(id)) console.err << "warning: mask without image skipped: " << path.string() << '\n';
  }

  std::vector<SliceSample> samples;
  for (const auto& [id, image_path] : images) {
    const auto mask_it = masks.find(id);
    if (mask_it == masks.end()) {
      console.err << "warning: image without mask skipped: " << image_path.string() << '\n';
      continue;
    }
    const Volume image = read_nifti1_file(image_path);
    const Volume mask = read_nifti1_file(mask_it->second);
    if (image.nx() != mask.nx() || image.ny() != mask.ny() || image.planes() != mask.planes()) {
      throw DataError(mask_it->second.string() + ": mask extents differ from " + image_path.string());
    }
    const auto image_slices = slice_volume(image);
    const auto mask_slices = slice_volume(mask);
    for (std::size_t z = 0; z < image_slices.size(); ++z) {
      SegmentationMask labels;
      try {
        labels = mask_from_image(mask_slices[z].image, args.classes);
      } catch (const DataError& e) {
        throw DataError(mask_it->second.string() + " (slice " + std::to_string(z) + "): " + e.what());
      }
      labels.spacing = PixelSpacing{mask.spacing[1], mask.spacing[0]};
      SliceSample s;
      s.id = slice_id(id, z);
      s.image = normalize_resize(image_slices[z].image, args.height, args.width);
      s.mask = resize_mask(labels, args.height, args.width);
      s.provenance = {id, z, phase_from_id(id)};
      samples.push_back(std::move(s));
    }
  }
  if (samples.empty()) console.err << "warning: no paired volumes found in " << args.input.string() << '\n';
  DatasetManifest m = write_dataset(args.output, samples, args.folds, args.seed);
  if (samples.empty()) {
    m.height = args.height;
    m.width = args.width;
    m.classes = args.classes;
    write_manifest(args.output / "manifest.json", m);
  }
  console.out << "wrote " << samples.size() << " samples to " << (args.output / "manifest.json").string() << '\n';
  return kSuccess;
}

std::uint64_t phantom_seed(std::uint64_t master, std::size_t index) { return derive_seed(master, index); }

int cmd_generate_phantoms(const PhantomArgs& args, const std::vector<std::string>& argv, Console console) {
  if (args.count == 0) throw ConfigError("--count must be positive");
  RunManifest run;
  run.command = "generate-phantoms";
  run.argv = argv;
  run.config = {{"count", args.count}, {"height", args.height}, {"width", args.width}, {"folds", args.folds}};
  run.seed = args.seed;
  run.outputs["manifest"] = (args.output / "manifest.json").string();
  fs::create_directories(args.output);
  write_run_manifest(args.output / kRunManifestName, run);

  std::vector<SliceSample> samples;
  samples.reserve(args.count);
  for (std::size_t i = 0; i < args.count; ++i) {
    samples.push_back(generate_phantom(phantom_seed(args.seed, i), args.height, args.width));
  }
  write_dataset(args.output, samples, args.folds, args.seed);
  console.out << "wrote " << samples.size() << " phantoms to " << (args.output / "manifest.json").string() << '\n';
  return kSuccess;
}

RunConfig resolve_train_config(const TrainArgs& args, const DatasetManifest& manifest) {
  RunConfig base;
  base.network.height = manifest.height;
  base.network.width = manifest.width;
  base.network.classes = manifest.classes;
  RunConfig cfg = args.config ? read_run_config(*args.config, base) : base;
  json overrides = json::object();
  if (args.seed) overrides["seed"] = *args.seed;
  if (args.epochs) overrides["epochs"] = *args.epochs;
  if (args.batch_size) overrides["batch_size"] = *args.batch_size;
  if (args.learning_rate) overrides["learning_rate"] = *args.learning_rate;
  if (args.folds) overrides["folds"] = *args.folds;
  if (args.split) overrides["split"] = *args.split;
  if (args.loss) overrides["loss"] = *args.loss;
  cfg.training = train_config_from_json(overrides, cfg.training, "flags");
  cfg.network.validate();
  cfg.training.validate();
  if (cfg.network.height != manifest.height || cfg.network.width != manifest.width) {
    throw ConfigError("network extents " + std::to_string(cfg.network.height) + "x" +
                      std::to_string(cfg.network.width) + " differ from the dataset's " +
                      std::to_string(manifest.height) + "x" + std::to_string(manifest.width));
  }
  return cfg;
}

int cmd_train(const TrainArgs& args, const std::vector<std::string>& argv, Console console) {
  if (!fs::is_regular_file(args.data)) throw ConfigError("dataset manifest not found: " + args.data.string());
  if (args.config && !fs::is_regular_file(*args.config)) {
    throw ConfigError("config file not found: " + args.config->string());
  }
  const DatasetManifest manifest = read_manifest(args.data);
  const RunConfig cfg = resolve_train_config(args, manifest);

  RunManifest run;
  run.command = "train";
  run.argv = argv;
  run.config = to_json(cfg);
  run.seed = cfg.training.seed;
  run.inputs["data"] = args.data.string();
  if (args.config) run.inputs["config"] = args.config->string();
  run.outputs["config"] = (args.output / "config.json").string();
  run.outputs["report"] = (args.output / "cv_report.json").string();
  run.outputs["folds"] = (args.output / "fold_<k>").string();
  fs::create_directories(args.output);
  write_run_manifest(args.output / kRunManifestName, run);
  write_json(args.output / "config.json", to_json(cfg));

  const std::vector<SliceSample> samples = load_dataset(args.data);
  if (samples.size() < cfg.training.folds) {
    throw ConfigError("dataset has " + std::to_string(samples.size()) + " samples, fewer than folds = " +
                      std::to_string(cfg.training.folds));
  }
  console.out << "training on " << samples.size() << " samples, " << count_parameters(URVedaModel::create(cfg.network, 0))
              << " parameters\n";
  const CrossValidationReport report =
      cross_validate(samples, cfg.network, cfg.training, args.output, [&](std::size_t fold, const EpochRecord& r) {
        console.out << "fold " << fold << " epoch " << r.epoch;
        if (r.train_loss) console.out << " loss " << *r.train_loss;
        console.out << " val_dsc " << r.val_dsc << '\n';
      });
  write_json(args.output / "cv_report.json", to_json(report));
  console.out << "mean best validation DSC " << report.mean_best_dsc << " (min " << report.min_best_dsc << ", max "
              << report.max_best_dsc << ")\n";
  return kSuccess;
}

int cmd_evaluate(const EvaluateArgs& args, const std::vector<std::string>& argv, Console console) {
  if (args.pred_dir.has_value() == args.checkpoint.has_value()) {
    throw ConfigError("evaluate needs exactly one of --pred or --checkpoint");
  }
  if (!fs::is_regular_file(args.truth)) throw ConfigError("truth manifest not found: " + args.truth.string());
  if (args.pred_dir && !fs::is_directory(*args.pred_dir)) {
    throw ConfigError("prediction directory not found: " + args.pred_dir->string());
  }
  const fs::path json_path = sibling(args.report, ".json");

  RunManifest run;
  run.command = "evaluate";
  run.argv = argv;
  run.config = json::object();
  run.inputs["truth"] = args.truth.string();
  if (args.pred_dir) run.inputs["pred"] = args.pred_dir->string();
  if (args.checkpoint) run.inputs["checkpoint"] = args.checkpoint->string();
  run.outputs["report"] = args.report.string();
  run.outputs["report_json"] = json_path.string();
  if (args.report.has_parent_path()) fs::create_directories(args.report.parent_path());
  write_run_manifest(sibling(args.report, ".manifest.json"), run);

  const DatasetManifest manifest = read_manifest(args.truth);
  const fs::path truth_dir = args.truth.parent_path();
  std::optional<URVedaModel> model;
  if (args.checkpoint) {
    model.emplace(load_checkpoint(*args.checkpoint));
    const NetworkConfig& c = model->config();
    if (c.height != manifest.height || c.width != manifest.width || c.classes != manifest.classes) {
      throw DataError("checkpoint " + args.checkpoint->string() + " was built for " + std::to_string(c.height) +
                      "x" + std::to_string(c.width) + " with " + std::to_string(c.classes) +
                      " classes; the truth manifest has " + std::to_string(manifest.height) + "x" +
                      std::to_string(manifest.width) + " with " + std::to_string(manifest.classes));
    }
  }

  std::vector<SampleMetrics> metrics;
  json per_sample = json::array();
  json failures = json::array();
  for (const ManifestEntry& entry : manifest.entries) {
    try {
      SegmentationMask truth = read_mask_file(truth_dir / entry.mask, manifest.classes);
      truth.spacing = entry.spacing;
      SegmentationMask pred;
      if (model) {
        pred = predict_mask(model->forward(load_sample(truth_dir, manifest, entry).image));
      } else {
        const auto path = find_prediction(*args.pred_dir, entry.id);
        if (!path) throw DataError("no prediction found for " + entry.id);
        pred = read_mask_file(*path, manifest.classes);
      }
      pred.spacing = truth.spacing;
      SampleMetrics sm{entry.id, entry.provenance.phase, evaluate(pred, truth)};
      per_sample.push_back({{"id", sm.id}, {"phase", sm.phase}, {"metrics", to_json(sm.metrics)}});
      metrics.push_back(std::move(sm));
    } catch (const std::exception& e) {
      console.err << "error: sample " << entry.id << ": " << e.what() << '\n';
      failures.push_back({{"id", entry.id}, {"error", e.what()}});
    }
  }

  const ReportTable table = aggregate_report(metrics, manifest.classes);
  std::ofstream out(args.report);
  if (!out) throw DataError("cannot write " + args.report.string());
  write_report_table(out, table);
  out.close();
  write_json(json_path, {{"table", to_json(table)},
                         {"samples", std::move(per_sample)},
                         {"failures", failures},
                         {"evaluated", metrics.size()},
                         {"failed", failures.size()}});
  write_report_table(console.out, table);
  if (!failures.empty()) {
    console.err << failures.size() << " of " << manifest.entries.size() << " samples failed\n";
    return kDataFailure;
  }
  return kSuccess;
}

int cmd_predict(const PredictArgs& args, const std::vector<std::string>& argv, Console console) {
  RunManifest run;
  run.command = "predict";
  run.argv = argv;
  run.config = {{"slice", args.slice}};
  run.inputs["checkpoint"] = args.checkpoint.string();
  run.inputs["image"] = args.image.string();
  run.outputs["mask"] = args.output.string();
  if (args.output.has_parent_path()) fs::create_directories(args.output.parent_path());
  write_run_manifest(sibling(args.output, ".manifest.json"), run);

  const URVedaModel model = load_checkpoint(args.checkpoint);
  check_requested_size(args.size, model.config(), args.checkpoint);
  const Tensor x = load_input_image(args.image, args.slice, model.config().height, model.config().width);
  write_label_map(args.output, predict_mask(model.forward(x)));
  console.out << "wrote " << args.output.string() << '\n';
  return kSuccess;
}

int cmd_overlay(const OverlayArgs& args, const std::vector<std::string>& argv, Console console) {
  if (args.checkpoint.has_value() == args.mask.has_value()) {
    throw ConfigError("overlay needs exactly one of --checkpoint or --mask");
  }
  RunManifest run;
  run.command = "overlay";
  run.argv = argv;
  run.config = {{"slice", args.slice}};
  if (args.checkpoint) run.inputs["checkpoint"] = args.checkpoint->string();
  if (args.mask) run.inputs["mask"] = args.mask->string();
  run.inputs["image"] = args.image.string();
  run.outputs["overlay"] = args.output.string();
  if (args.output.has_parent_path()) fs::create_directories(args.output.parent_path());
  write_run_manifest(sibling(args.output, ".manifest.json"), run);

  SegmentationMask mask;
  Tensor x;
  if (args.checkpoint) {
    const URVedaModel model = load_checkpoint(*args.checkpoint);
    check_requested_size(args.size, model.config(), *args.checkpoint);
    x = load_input_image(args.image, args.slice, model.config().height, model.config().width);
    mask = predict_mask(model.forward(x));
  } else {
    mask = read_mask_file(*args.mask, 256);
    mask.classes = std::max<std::size_t>(kCardiacClasses, 1 + *std::max_element(mask.labels.begin(), mask.labels.end()));
    x = load_input_image(args.image, args.slice, mask.height, mask.width);
  }
  write_file_bytes(args.output, encode_ppm(render_overlay(to_gray8(x), mask)));
  console.out << "wrote " << args.output.string() << '\n';
  return kSuccess;
}

}  // namespace urveda::cli
