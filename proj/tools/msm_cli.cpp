// msm: corpus generation, training, evaluation, serving and one-shot enhancement.
// Exit codes: 0 ok, 1 other failure, 2 config error, 3 missing artifact.

#include "msm/app/commands.hpp"
#include "msm/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Masked style modeling for personalized image enhancement"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "JSON run configuration");
  app.add_option("-s,--set", overrides, "override a field, e.g. --set train.epochs_step1=5")->take_all();

  auto* gen = app.add_subcommand("gen-data", "synthesize the corpus and train the degrader")->fallthrough();
  auto* train = app.add_subcommand("train", "step 1 then step 2 training")->fallthrough();
  bool no_resume = false;
  train->add_flag("--no-resume", no_resume, "retrain step 1 even when a matching checkpoint exists");
  auto* eval = app.add_subcommand("eval", "benchmark held-out users")->fallthrough();
  auto* serve = app.add_subcommand("serve", "run the HTTP service")->fallthrough();
  auto* show = app.add_subcommand("print-config", "print the merged configuration")->fallthrough();
  auto* enh = app.add_subcommand("enhance", "personalize one image from preferred pairs")->fallthrough();
  std::vector<std::string> pair_args;
  std::string pairs_dir, input, output, method = "masked";
  enh->add_option("--pair", pair_args, "ORIGINAL,RETOUCHED")->delimiter(';');
  enh->add_option("--pairs-dir", pairs_dir, "directory of <name>_x.png / <name>_y.png");
  enh->add_option("-i,--input", input, "image to enhance")->required()->check(CLI::ExistingFile);
  enh->add_option("-o,--output", output, "output PNG")->required();
  enh->add_option("-m,--method", method, "masked | average | weighted | pienet");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const msm::RunConfig cfg = msm::load_run_config(config_path, overrides);
  if (*gen) {
    msm::cmd_gen_data(cfg, std::cout);
  } else if (*train) {
    msm::cmd_train(cfg, std::cout, !no_resume);
  } else if (*eval) {
    msm::cmd_eval(cfg, std::cout);
  } else if (*serve) {
    msm::cmd_serve(cfg, std::cout);
  } else if (*show) {
    std::cout << msm::run_config_to_json(cfg).dump(2) << '\n';
  } else if (*enh) {
    std::vector<std::pair<std::string, std::string>> pairs;
    if (!pairs_dir.empty()) pairs = msm::pairs_in_directory(pairs_dir);
    for (const auto& p : pair_args) {
      const auto comma = p.find(',');
      if (comma == std::string::npos) throw msm::ConfigError("pair", "expected ORIGINAL,RETOUCHED, got '" + p + "'");
      pairs.emplace_back(p.substr(0, comma), p.substr(comma + 1));
    }
    msm::cmd_enhance(cfg, pairs, input, output, method, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const msm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const msm::MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
