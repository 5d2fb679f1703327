#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "urveda/errors.h"
#include "urveda/json_io.h"

namespace urveda {
namespace {

using nlohmann::json;

std::string config_error(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no ConfigError thrown";
  return {};
}

TEST(JsonIoTest, NetworkConfigRoundTrip) {
  NetworkConfig c;
  c.depth = 2;
  c.embed_dim = 64;
  c.vit_placement = VitPlacement::kInterleaved;
  c.dam_mode = DamMode::kProduct;
  c.edge_fusion = EdgeFusion::kMultiply;
  const json j = to_json(c);
  EXPECT_EQ(j.at("vit_placement"), "interleaved");
  EXPECT_EQ(j.at("dam_mode"), "product");
  EXPECT_EQ(j.at("edge_fusion"), "multiply");
  EXPECT_EQ(network_config_from_json(j), c);
}

TEST(JsonIoTest, TrainAndRunConfigRoundTrip) {
  TrainConfig t;
  t.epochs = 20;
  t.learning_rate = 0.005;
  t.seed = 123456789012345ULL;
  t.loss = LossMode::kCrossEntropyDice;
  t.split = SplitMode::kSingle;
  EXPECT_EQ(to_json(t).at("loss"), "ce+dice");
  EXPECT_EQ(train_config_from_json(to_json(t)), t);
  RunConfig r;
  r.network.base_channels = 4;
  r.training = t;
  const RunConfig back = run_config_from_json(json::parse(to_json(r).dump()));
  EXPECT_EQ(back.network, r.network);
  EXPECT_EQ(back.training, r.training);
}

TEST(JsonIoTest, AbsentKeysKeepBase) {
  NetworkConfig base;
  base.depth = 2;
  const NetworkConfig c = network_config_from_json(json{{"heads", 2}}, base);
  EXPECT_EQ(c.depth, 2u);
  EXPECT_EQ(c.heads, 2u);
  RunConfig rb;
  rb.training.epochs = 7;
  const RunConfig r = run_config_from_json(json{{"network", {{"depth", 4}}}}, rb);
  EXPECT_EQ(r.training.epochs, 7u);
  EXPECT_EQ(r.network.depth, 4u);
}

TEST(JsonIoTest, UnknownKeysAreNamed) {
  const std::string msg =
      config_error([] { run_config_from_json(json{{"network", {{"dept", 3}}}}); });
  EXPECT_NE(msg.find("network.dept"), std::string::npos) << msg;
  const std::string top = config_error([] { run_config_from_json(json{{"optimizer", {}}}); });
  EXPECT_NE(top.find("optimizer"), std::string::npos) << top;
  const std::string train = config_error([] { run_config_from_json(json{{"training", {{"lr", 0.1}}}}); });
  EXPECT_NE(train.find("training.lr"), std::string::npos) << train;
}

TEST(JsonIoTest, WrongTypesAreRejected) {
  EXPECT_NE(config_error([] { network_config_from_json(json{{"depth", -1}}); }).find("network.depth"),
            std::string::npos);
  EXPECT_NE(config_error([] { network_config_from_json(json{{"depth", 2.5}}); }).find("network.depth"),
            std::string::npos);
  EXPECT_NE(config_error([] { network_config_from_json(json{{"depth", "3"}}); }).find("network.depth"),
            std::string::npos);
  EXPECT_NE(config_error([] { train_config_from_json(json{{"learning_rate", "fast"}}); })
                .find("training.learning_rate"),
            std::string::npos);
  const std::string e = config_error([] { network_config_from_json(json{{"dam_mode", "parallel"}}); });
  EXPECT_NE(e.find("sequential"), std::string::npos) << e;
  EXPECT_NE(e.find("product"), std::string::npos) << e;
  config_error([] { run_config_from_json(json::array()); });
  config_error([] { run_config_from_json(json{{"network", 3}}); });
}

TEST(JsonIoTest, ReadRunConfigFromFile) {
  const auto dir = std::filesystem::temp_directory_path() / "urveda_test_json_io";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "good.json") << R"({"training": {"epochs": 3, "split": "single"}})";
    std::ofstream(dir / "bad.json") << "{ \"training\": ";
  }
  const RunConfig r = read_run_config(dir / "good.json");
  EXPECT_EQ(r.training.epochs, 3u);
  EXPECT_EQ(r.training.split, SplitMode::kSingle);
  EXPECT_NE(config_error([&] { read_run_config(dir / "bad.json"); }).find("bad.json"), std::string::npos);
  EXPECT_NE(config_error([&] { read_run_config(dir / "none.json"); }).find("none.json"), std::string::npos);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace urveda
