#include "urveda/json_io.h"

#include <fstream>
#include <set>

#include "urveda/errors.h"

namespace urveda {

using nlohmann::json;

namespace {

bool is_non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown config key '" + join_path(path, key) + "'");
  }
}

void read_size(const json& j, const std::string& path, const char* key, std::size_t& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!is_non_negative_integer(v)) {
    throw ConfigError(join_path(path, key) + " must be a non-negative integer");
  }
  out = v.get<std::size_t>();
}

void read_u64(const json& j, const std::string& path, const char* key, std::uint64_t& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!is_non_negative_integer(v)) throw ConfigError(join_path(path, key) + " must be a non-negative integer");
  out = v.get<std::uint64_t>();
}

void read_double(const json& j, const std::string& path, const char* key, double& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join_path(path, key) + " must be a number");
  out = v.get<double>();
}

template <typename Enum>
void read_enum(const json& j, const std::string& path, const char* key,
               std::initializer_list<std::pair<const char*, Enum>> names, Enum& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  std::string options;
  for (const auto& [name, value] : names) {
    if (v.is_string() && v.get<std::string>() == name) {
      out = value;
      return;
    }
    options += options.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(join_path(path, key) + " must be one of: " + options);
}

const char* name_of(VitPlacement p) { return p == VitPlacement::kBottleneck ? "bottleneck" : "interleaved"; }
const char* name_of(DamMode m) { return m == DamMode::kSequential ? "sequential" : "product"; }
const char* name_of(EdgeFusion f) { return f == EdgeFusion::kConcat ? "concat" : "multiply"; }
const char* name_of(LossMode m) { return m == LossMode::kCrossEntropy ? "ce" : "ce+dice"; }
const char* name_of(SplitMode m) { return m == SplitMode::kCrossValidation ? "cross_validation" : "single"; }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const NetworkConfig& c) {
  return {{"height", c.height},
          {"width", c.width},
          {"in_channels", c.in_channels},
          {"depth", c.depth},
          {"base_channels", c.base_channels},
          {"classes", c.classes},
          {"vit_depth", c.vit_depth},
          {"embed_dim", c.embed_dim},
          {"patch", c.patch},
          {"heads", c.heads},
          {"reduction", c.reduction},
          {"spatial_kernel", c.spatial_kernel},
          {"vit_placement", name_of(c.vit_placement)},
          {"dam_mode", name_of(c.dam_mode)},
          {"edge_fusion", name_of(c.edge_fusion)}};
}

NetworkConfig network_config_from_json(const json& j, const NetworkConfig& base, const std::string& path) {
  check_keys(j, path,
             {"height", "width", "in_channels", "depth", "base_channels", "classes", "vit_depth", "embed_dim",
              "patch", "heads", "reduction", "spatial_kernel", "vit_placement", "dam_mode", "edge_fusion"});
  NetworkConfig c = base;
  read_size(j, path, "height", c.height);
  read_size(j, path, "width", c.width);
  read_size(j, path, "in_channels", c.in_channels);
  read_size(j, path, "depth", c.depth);
  read_size(j, path, "base_channels", c.base_channels);
  read_size(j, path, "classes", c.classes);
  read_size(j, path, "vit_depth", c.vit_depth);
  read_size(j, path, "embed_dim", c.embed_dim);
  read_size(j, path, "patch", c.patch);
  read_size(j, path, "heads", c.heads);
  read_size(j, path, "reduction", c.reduction);
  read_size(j, path, "spatial_kernel", c.spatial_kernel);
  read_enum(j, path, "vit_placement",
            {{"bottleneck", VitPlacement::kBottleneck}, {"interleaved", VitPlacement::kInterleaved}},
            c.vit_placement);
  read_enum(j, path, "dam_mode", {{"sequential", DamMode::kSequential}, {"product", DamMode::kProduct}},
            c.dam_mode);
  read_enum(j, path, "edge_fusion", {{"concat", EdgeFusion::kConcat}, {"multiply", EdgeFusion::kMultiply}},
            c.edge_fusion);
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"folds", c.folds},
          {"seed", c.seed},
          {"loss", name_of(c.loss)},
          {"split", name_of(c.split)},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon}};
}

TrainConfig train_config_from_json(const json& j, const TrainConfig& base, const std::string& path) {
  check_keys(j, path,
             {"epochs", "batch_size", "learning_rate", "folds", "seed", "loss", "split", "beta1", "beta2", "epsilon"});
  TrainConfig c = base;
  read_size(j, path, "epochs", c.epochs);
  read_size(j, path, "batch_size", c.batch_size);
  read_double(j, path, "learning_rate", c.learning_rate);
  read_size(j, path, "folds", c.folds);
  read_u64(j, path, "seed", c.seed);
  read_enum(j, path, "loss", {{"ce", LossMode::kCrossEntropy}, {"ce+dice", LossMode::kCrossEntropyDice}}, c.loss);
  read_enum(j, path, "split", {{"cross_validation", SplitMode::kCrossValidation}, {"single", SplitMode::kSingle}},
            c.split);
  read_double(j, path, "beta1", c.beta1);
  read_double(j, path, "beta2", c.beta2);
  read_double(j, path, "epsilon", c.epsilon);
  return c;
}

json to_json(const RunConfig& c) { return {{"network", to_json(c.network)}, {"training", to_json(c.training)}}; }

RunConfig run_config_from_json(const json& j, const RunConfig& base) {
  check_keys(j, "", {"network", "training"});
  RunConfig c = base;
  if (j.contains("network")) c.network = network_config_from_json(j.at("network"), base.network);
  if (j.contains("training")) c.training = train_config_from_json(j.at("training"), base.training);
  return c;
}

RunConfig read_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": malformed config: " + e.what());
  }
  return run_config_from_json(j, base);
}

json to_json(const MetricReport& report) {
  json classes = json::array();
  for (const auto& c : report.per_class) {
    classes.push_back({{"label", c.label},
                       {"name", c.name},
                       {"dsc", c.dsc},
                       {"hd_px", optional_number(c.hd_px)},
                       {"hd_mm", optional_number(c.hd_mm)}});
  }
  return {{"classes", std::move(classes)},
          {"mean_dsc", report.mean_dsc},
          {"mean_hd_px", optional_number(report.mean_hd_px)},
          {"mean_hd_mm", optional_number(report.mean_hd_mm)},
          {"spacing_known", report.spacing_known}};
}

json to_json(const ReportTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    json dsc = json::object();
    json hd = json::object();
    for (std::size_t c = 0; c < table.column_names.size(); ++c) {
      dsc[table.column_names[c]] = r.dsc[c];
      hd[table.column_names[c]] = optional_number(r.hd[c]);
    }
    rows.push_back({{"group", r.group},
                    {"samples", r.samples},
                    {"dsc", std::move(dsc)},
                    {"hd", std::move(hd)},
                    {"mean_dsc", r.mean_dsc},
                    {"mean_hd", optional_number(r.mean_hd)}});
  }
  return {{"columns", table.column_names}, {"hd_unit", table.hd_in_mm ? "mm" : "px"}, {"rows", std::move(rows)}};
}

json to_json(const CrossValidationReport& report) {
  json folds = json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"fold", f.fold},
                     {"init_seed", f.init_seed},
                     {"best_epoch", f.log.best_epoch},
                     {"best_val_dsc", f.log.best_val_dsc},
                     {"initial_val_dsc", f.log.epochs.front().val_dsc},
                     {"validation_ids", f.validation_ids}});
  }
  return {{"folds", std::move(folds)},
          {"mean_best_dsc", report.mean_best_dsc},
          {"min_best_dsc", report.min_best_dsc},
          {"max_best_dsc", report.max_best_dsc}};
}

}  // namespace urveda
