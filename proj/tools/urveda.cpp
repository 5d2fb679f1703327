// Command-line front end: preprocess, generate-phantoms, train, evaluate,
// predict and overlay. Exit codes: 0 success, 1 usage, 2 data error,
// 3 numeric failure.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "urveda/cli_commands.h"

namespace {

using namespace urveda::cli;

// Parses "H,W" (or a single "N" for square extents).
std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto comma = text.find(',');
  try {
    std::size_t used = 0;
    if (comma == std::string::npos) {
      const std::size_t n = std::stoul(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return {n, n};
    }
    const std::string h = text.substr(0, comma);
    const std::string w = text.substr(comma + 1);
    const std::size_t hv = std::stoul(h, &used);
    if (used != h.size()) throw std::invalid_argument(text);
    const std::size_t wv = std::stoul(w, &used);
    if (used != w.size()) throw std::invalid_argument(text);
    return {hv, wv};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--size", "expected H,W but got '" + text + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  Console console{std::cout, std::cerr};

  CLI::App app{"U-R-VEDA cardiac segmentation toolkit"};
  app.set_version_flag("--version", std::string(URVEDA_VERSION));
  app.require_subcommand(1);

  PreprocessArgs pre;
  std::string pre_size = "64,64";
  auto* cmd_pre = app.add_subcommand("preprocess", "Slice paired NIfTI-1 volumes into a 2D dataset");
  cmd_pre->add_option("--input", pre.input, "Directory holding <id>.nii and <id>_gt.nii")->required();
  cmd_pre->add_option("--output", pre.output, "Dataset output directory")->required();
  cmd_pre->add_option("--size", pre_size, "Target extents H,W")->capture_default_str();
  cmd_pre->add_option("--classes", pre.classes, "Number of label classes")->capture_default_str();
  cmd_pre->add_option("--folds", pre.folds, "Folds recorded in the manifest")->capture_default_str();
  cmd_pre->add_option("--seed", pre.seed, "Seed for the recorded fold split")->capture_default_str();

  PhantomArgs ph;
  std::string ph_size = "64,64";
  auto* cmd_ph = app.add_subcommand("generate-phantoms", "Write a synthetic cardiac phantom dataset");
  cmd_ph->add_option("--output", ph.output, "Dataset output directory")->required();
  cmd_ph->add_option("--count", ph.count, "Number of phantoms")->capture_default_str();
  cmd_ph->add_option("--seed", ph.seed, "Master seed")->capture_default_str();
  cmd_ph->add_option("--size", ph_size, "Extents H,W (even)")->capture_default_str();
  cmd_ph->add_option("--folds", ph.folds, "Folds recorded in the manifest")->capture_default_str();

  TrainArgs tr;
  auto* cmd_tr = app.add_subcommand("train", "Train with k-fold cross-validation");
  cmd_tr->add_option("--data", tr.data, "Dataset manifest.json")->required();
  cmd_tr->add_option("--config", tr.config, "JSON config with optional 'network' and 'training' objects");
  cmd_tr->add_option("--out", tr.output, "Output directory")->required();
  cmd_tr->add_option("--seed", tr.seed, "Override training.seed");
  cmd_tr->add_option("--epochs", tr.epochs, "Override training.epochs");
  cmd_tr->add_option("--batch-size", tr.batch_size, "Override training.batch_size");
  cmd_tr->add_option("--lr", tr.learning_rate, "Override training.learning_rate");
  cmd_tr->add_option("--folds", tr.folds, "Override training.folds");
  cmd_tr->add_option("--split", tr.split, "Override training.split (cross_validation|single)");
  cmd_tr->add_option("--loss", tr.loss, "Override training.loss (ce|ce+dice)");

  EvaluateArgs ev;
  auto* cmd_ev = app.add_subcommand("evaluate", "Score predictions or a checkpoint against a dataset");
  auto* ev_pred = cmd_ev->add_option("--pred", ev.pred_dir, "Directory of predicted label maps (<id>.nii or <id>.pgm)");
  auto* ev_ckpt = cmd_ev->add_option("--checkpoint", ev.checkpoint, "Checkpoint to run on the truth images");
  ev_pred->excludes(ev_ckpt);
  cmd_ev->add_option("--truth", ev.truth, "Truth dataset manifest.json")->required();
  cmd_ev->add_option("--report", ev.report, "Report table path (structured copy at <report>.json)")->required();

  PredictArgs pr;
  std::string pr_size;
  auto* cmd_pr = app.add_subcommand("predict", "Predict a label map for one image");
  cmd_pr->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
  cmd_pr->add_option("--image", pr.image, "Input image (.nii or .pgm)")->required();
  cmd_pr->add_option("--out", pr.output, "Output label map (.pgm indexed, or .nii)")->required();
  cmd_pr->add_option("--slice", pr.slice, "Slice index for NIfTI volumes")->capture_default_str();
  cmd_pr->add_option("--size", pr_size, "Expected extents H,W; must match the checkpoint");

  OverlayArgs ov;
  std::string ov_size;
  auto* cmd_ov = app.add_subcommand("overlay", "Render class contours over the input image");
  auto* ov_ckpt = cmd_ov->add_option("--checkpoint", ov.checkpoint, "Checkpoint used to predict the contours");
  auto* ov_mask = cmd_ov->add_option("--mask", ov.mask, "Stored label map to draw instead of predicting");
  ov_ckpt->excludes(ov_mask);
  cmd_ov->add_option("--image", ov.image, "Input image (.nii or .pgm)")->required();
  cmd_ov->add_option("--out", ov.output, "Output overlay (.ppm)")->required();
  cmd_ov->add_option("--slice", ov.slice, "Slice index for NIfTI volumes")->capture_default_str();
  cmd_ov->add_option("--size", ov_size, "Expected extents H,W; must match the checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (*cmd_pre) {
      std::tie(pre.height, pre.width) = parse_size(pre_size);
      return cmd_preprocess(pre, args, console);
    }
    if (*cmd_ph) {
      std::tie(ph.height, ph.width) = parse_size(ph_size);
      return cmd_generate_phantoms(ph, args, console);
    }
    if (*cmd_tr) return cmd_train(tr, args, console);
    if (*cmd_ev) return cmd_evaluate(ev, args, console);
    if (*cmd_pr) {
      if (!pr_size.empty()) pr.size = parse_size(pr_size);
      return cmd_predict(pr, args, console);
    }
    if (*cmd_ov) {
      if (!ov_size.empty()) ov.size = parse_size(ov_size);
      return cmd_overlay(ov, args, console);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUsage;
}
