#pragma once

// Subcommand implementations behind the `urveda` tool. Each command writes a
// run manifest before doing any long-running work and throws the library's
// error types; exit_code_for() maps them onto the scripting contract.

#include <array>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "urveda/dataset.h"
#include "urveda/imaging.h"
#include "urveda/json_io.h"

namespace urveda::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kDataFailure = 2, kNumericFailure = 3 };

// ConfigError → usage; DataError/ShapeError/file errors → data; NumericError → numeric.
int exit_code_for(const std::exception& e);

struct Console {
  std::ostream& out;
  std::ostream& err;
};

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  std::string tool_version = URVEDA_VERSION;
};

nlohmann::json to_json(const RunManifest& manifest);
void write_run_manifest(const std::filesystem::path& path, const RunManifest& manifest);

struct PreprocessArgs {
  std::filesystem::path input;
  std::filesystem::path output;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t classes = kCardiacClasses;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
};
// Pairs <id>.nii with <id>_gt.nii, slices, normalizes and resizes each pair.
int cmd_preprocess(const PreprocessArgs& args, const std::vector<std::string>& argv, Console console);

struct PhantomArgs {
  std::filesystem::path output;
  std::size_t count = 200;
  std::uint64_t seed = 0;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t folds = 5;
};
int cmd_generate_phantoms(const PhantomArgs& args, const std::vector<std::string>& argv, Console console);
// Seed of phantom `index` in a set generated from `master`.
std::uint64_t phantom_seed(std::uint64_t master, std::size_t index);

struct TrainArgs {
  std::filesystem::path data;
  std::optional<std::filesystem::path> config;
  std::filesystem::path output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<std::size_t> folds;
  std::optional<std::string> split;
  std::optional<std::string> loss;
};
int cmd_train(const TrainArgs& args, const std::vector<std::string>& argv, Console console);
// Effective config: defaults ← manifest extents ← config file ← flags.
RunConfig resolve_train_config(const TrainArgs& args, const DatasetManifest& manifest);

struct EvaluateArgs {
  std::optional<std::filesystem::path> pred_dir;
  std::optional<std::filesystem::path> checkpoint;
  std::filesystem::path truth;
  std::filesystem::path report;  // TSV table; structured form at <report>.json
};
int cmd_evaluate(const EvaluateArgs& args, const std::vector<std::string>& argv, Console console);

struct PredictArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path image;
  std::filesystem::path output;
  std::size_t slice = 0;
  std::optional<std::pair<std::size_t, std::size_t>> size;  // must match the checkpoint when given
};
// Writes the label map as an indexed 8-bit PGM (or uint8 NIfTI for .nii outputs).
int cmd_predict(const PredictArgs& args, const std::vector<std::string>& argv, Console console);

struct OverlayArgs {
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> mask;  // overlay a stored label map instead of predicting
  std::filesystem::path image;
  std::filesystem::path output;  // PPM
  std::size_t slice = 0;
  std::optional<std::pair<std::size_t, std::size_t>> size;
};
int cmd_overlay(const OverlayArgs& args, const std::vector<std::string>& argv, Console console);

// Fixed contour color per class (RV red, LMyo green, LV blue, further classes cycle).
std::array<std::uint8_t, 3> class_color(std::uint8_t label);
// Grayscale image with every class boundary pixel painted in its class color.
Rgb8 render_overlay(const Gray8& image, const SegmentationMask& mask);

// Loads a 2D input (.nii plane `slice` or .pgm) as a normalized 1×H×W tensor.
Tensor load_input_image(const std::filesystem::path& path, std::size_t slice, std::size_t height,
                        std::size_t width);

}  // namespace urveda::cli
