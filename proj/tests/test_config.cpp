#include "msm/errors.hpp"
#include "msm/run_config.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace msm;
using nlohmann::json;

namespace {

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST(RunConfig, DefaultsValidateAndRoundTrip) {
  const RunConfig c;
  EXPECT_NO_THROW(c.validate());
  const json j = run_config_to_json(c);
  EXPECT_EQ(run_config_to_json(run_config_from_json(j)), j);
  EXPECT_TRUE(run_config_from_json(j).net == c.net);
  EXPECT_TRUE(run_config_from_json(json::object()).benchmark == c.benchmark);
}

TEST(RunConfig, UnknownKeysNameTheField) {
  EXPECT_EQ(field_of([] { run_config_from_json({{"colour", 1}}); }), "colour");
  EXPECT_EQ(field_of([] { run_config_from_json({{"net", {{"heads", 2}, {"lerning_rate", 1}}}}); }),
            "net.lerning_rate");
  EXPECT_EQ(field_of([] { run_config_from_json({{"train", 5}}); }), "train");
}

TEST(RunConfig, OverridesParseJsonOrString) {
  json j = run_config_to_json(RunConfig{});
  apply_override(j, "net.grid=4");
  apply_override(j, "workdir=elsewhere");
  apply_override(j, "benchmark.i_new_values=[1,3]");
  apply_override(j, "train.lr=5e-4");
  const RunConfig c = run_config_from_json(j);
  EXPECT_EQ(c.net.grid, 4);
  EXPECT_EQ(c.workdir, "elsewhere");
  EXPECT_EQ(c.benchmark.i_new_values, (std::vector<int>{1, 3}));
  EXPECT_DOUBLE_EQ(c.train.lr, 5e-4);
  EXPECT_THROW(apply_override(j, "no_equals_sign"), ConfigError);
  EXPECT_THROW(apply_override(j, "=3"), ConfigError);
  EXPECT_THROW(apply_override(j, "net..grid=3"), ConfigError);
}

TEST(RunConfig, CrossFieldChecks) {
  RunConfig c;
  c.train.i_train = c.corpus.images_per_user;
  EXPECT_EQ(field_of([&] { c.validate(); }), "corpus.images_per_user");
  c = RunConfig{};
  c.benchmark.i_new_values = {c.corpus.test_images_per_user};
  EXPECT_EQ(field_of([&] { c.validate(); }), "benchmark.i_new_values");
  c = RunConfig{};
  c.benchmark.methods = {"masked", "pienet"};
  EXPECT_EQ(field_of([&] { c.validate(); }), "benchmark.methods");
  c.train_pienet = true;
  EXPECT_NO_THROW(c.validate());
  c = RunConfig{};
  c.service.port = 70000;
  EXPECT_EQ(field_of([&] { c.validate(); }), "service.port");
  c = RunConfig{};
  c.corpus.n_test_users = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, LoadFromFile) {
  msm::test::TempDir dir("cfg");
  const auto path = dir.path() / "run.json";
  {
    std::ofstream out(path);
    out << json{{"workdir", "w"}, {"net", {{"grid", 1}}}}.dump();
  }
  const RunConfig c = load_run_config(path, {"train.epochs_step2=3"});
  EXPECT_EQ(c.workdir, "w");
  EXPECT_EQ(c.net.grid, 1);
  EXPECT_EQ(c.train.epochs_step2, 3);
  EXPECT_EQ(c.models_checkpoint(), std::filesystem::path("w") / "models" / "models.msm");
  EXPECT_THROW(load_run_config(path, {"net.grid=0"}), ConfigError);
  EXPECT_THROW(load_run_config(dir.path() / "absent.json"), MissingArtifact);
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  EXPECT_THROW(load_run_config(path), ConfigError);
  EXPECT_NO_THROW(load_run_config(""));
}

TEST(RunConfig, ShippedConfigsLoad) {
  for (const char* name : {"desk.json", "smoke.json"})
    EXPECT_NO_THROW(load_run_config(std::filesystem::path(MSM_SOURCE_DIR) / "configs" / name)) << name;
}
