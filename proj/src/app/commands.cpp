#include "msm/app/commands.hpp"

#include "msm/corpus/degrader.hpp"
#include "msm/corpus/manifest.hpp"
#include "msm/errors.hpp"
#include "msm/imaging/metrics.hpp"
#include "msm/imaging/png_io.hpp"
#include "msm/nets/checkpoint.hpp"
#include "msm/service/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>

namespace msm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

Corpus load_matching_corpus(const RunConfig& cfg) {
  Corpus corpus = read_corpus(cfg.corpus_dir());
  if (!(corpus.config == cfg.corpus))
    throw ConfigError("corpus", "the corpus in " + cfg.corpus_dir().string() +
                                    " was generated with different settings; rerun gen-data");
  return corpus;
}

Models load_trained(const RunConfig& cfg) {
  const fs::path path = cfg.models_checkpoint();
  if (!fs::exists(path)) throw MissingArtifact("trained models not found: " + path.string() + " (run train first)");
  return load_models(path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// The settings step 1 depends on; a step-1 checkpoint is reused only when they match.
json step1_signature(const RunConfig& cfg) {
  json train = cfg.train;
  train.erase("epochs_step2");
  train.erase("batch_step2");
  train.erase("samples_per_epoch_step2");
  json net = cfg.net;
  return {{"corpus", cfg.corpus}, {"degrader", cfg.degrader}, {"net", net}, {"train", train}, {"loss", cfg.loss}};
}

}  // namespace

GenDataSummary cmd_gen_data(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = cfg.corpus_dir();
  if (fs::exists(dir / "manifest.json")) fs::remove_all(dir);
  fs::create_directories(dir);

  Corpus corpus = build_corpus(cfg.corpus);
  log << "corpus: " << corpus.users.size() << " users, " << corpus.pair_count() << " pairs\n";
  GenDataSummary summary;
  summary.pairs = corpus.pair_count();
  if (cfg.corpus.pseudo_pairs) {
    const auto train_pairs = make_degrader_pairs(cfg.corpus, cfg.corpus.degrader_originals, 0);
    const auto val_pairs = make_degrader_pairs(cfg.corpus, std::max(10, cfg.corpus.degrader_originals / 3), 1);
    const DegradeModel degrader = train_degrader(train_pairs, cfg.degrader);
    int wins = 0;
    for (const auto& [enhanced, original] : val_pairs)
      wins += delta_e_ab(degrade(degrader, enhanced), original) < delta_e_ab(enhanced, original) ? 1 : 0;
    summary.degrader_initial_loss = degrader.epoch_losses.front();
    summary.degrader_final_loss = degrader.final_loss();
    summary.degrader_win_rate = static_cast<double>(wins) / static_cast<double>(val_pairs.size());
    log << "degrader: loss " << summary.degrader_initial_loss << " -> " << summary.degrader_final_loss
        << ", validation win rate " << summary.degrader_win_rate << '\n';
    apply_pseudo_originals(corpus, degrader);
    save_degrader(degrader, dir / "degrader.msm");
    write_json(dir / "degrader.json", {{"run_config", run_config_to_json(cfg)},
                                       {"epoch_losses", degrader.epoch_losses},
                                       {"validation_pairs", val_pairs.size()},
                                       {"validation_mae", degrader_mae(degrader, val_pairs)},
                                       {"validation_win_rate", summary.degrader_win_rate}});
  }
  write_corpus(corpus, dir, run_config_to_json(cfg));
  log << "gen-data done in " << seconds_since(t0) << " s -> " << dir.string() << '\n';
  return summary;
}

TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log, bool resume) {
  cfg.validate();
  const Corpus corpus = load_matching_corpus(cfg);
  const json signature = step1_signature(cfg);
  TrainSummary summary;
  TrainLog tlog;
  tlog.on_epoch = [&log](const EpochRecord& r) {
    log << "step " << r.step << " epoch " << r.epoch << " loss " << r.loss << " (" << r.seconds << " s)\n";
  };

  Models models;
  if (resume && fs::exists(cfg.step1_checkpoint())) {
    const Checkpoint ckpt = read_checkpoint(cfg.step1_checkpoint());
    if (ckpt.meta.value("signature", json()) == signature) {
      models = load_models(cfg.step1_checkpoint());
      summary.resumed_step1 = true;
      summary.step1_losses = ckpt.meta.value("losses", std::vector<double>{});
      for (std::size_t e = 0; e < summary.step1_losses.size(); ++e)
        tlog.epochs.push_back({1, static_cast<int>(e), summary.step1_losses[e], 0.0});
      log << "step 1: resumed from " << cfg.step1_checkpoint().string() << '\n';
    } else {
      log << "step 1: checkpoint settings differ, retraining\n";
    }
  }
  if (!summary.resumed_step1) {
    models = Models::initialize(cfg.net, StyleMode::Residual);
    summary.step1_losses = train_step1(models, corpus, cfg.train, cfg.loss, &tlog);
    save_models(models, cfg.step1_checkpoint(),
                json{{"stage", "step1"}, {"signature", signature}, {"losses", summary.step1_losses},
                     {"run_config", run_config_to_json(cfg)}}
                    .dump());
  }
  summary.reconstruction_psnr = reconstruction_psnr(models, corpus, 200);
  log << "step 1: reconstruction PSNR " << summary.reconstruction_psnr << " dB\n";

  summary.step2_losses = train_step2(models, corpus, cfg.train, &tlog);
  save_models(models, cfg.models_checkpoint(),
              json{{"stage", "final"}, {"step2_losses", summary.step2_losses}, {"run_config", run_config_to_json(cfg)}}
                  .dump());

  json metrics = {{"run_config", run_config_to_json(cfg)},
                  {"epochs", tlog.to_json()},
                  {"resumed_step1", summary.resumed_step1},
                  {"reconstruction_psnr", summary.reconstruction_psnr}};
  if (cfg.train_pienet) {
    const PieNetModels pienet = train_pienet_baseline(corpus, cfg.net, cfg.pienet, cfg.loss);
    save_pienet(pienet, cfg.pienet_checkpoint());
    metrics["pienet"] = {{"triplet_losses", pienet.triplet_losses}, {"enhancer_losses", pienet.enhancer_losses}};
    log << "pienet baseline: triplet loss " << pienet.triplet_losses.front() << " -> " << pienet.triplet_losses.back()
        << '\n';
  }
  write_json(cfg.metrics_log(), metrics);
  log << "train done -> " << cfg.models_dir().string() << '\n';
  return summary;
}

BenchmarkReport cmd_eval(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Models models = load_trained(cfg);
  const Corpus corpus = load_matching_corpus(cfg);
  std::optional<PieNetModels> pienet;
  if (std::find(cfg.benchmark.methods.begin(), cfg.benchmark.methods.end(), "pienet") != cfg.benchmark.methods.end()) {
    if (!fs::exists(cfg.pienet_checkpoint()))
      throw MissingArtifact("PieNet baseline not found: " + cfg.pienet_checkpoint().string());
    pienet = load_pienet(cfg.pienet_checkpoint());
  }
  const BenchmarkReport report = run_benchmark(models, corpus, cfg.benchmark, pienet ? &*pienet : nullptr);
  json j = report.to_json();
  j["run_config"] = run_config_to_json(cfg);
  write_json(cfg.reports_dir() / "benchmark.json", j);
  write_text(cfg.reports_dir() / "benchmark.txt",
             "# run_config " + run_config_to_json(cfg).dump() + "\n" + report.to_text());
  log << report.to_text();
  return report;
}

void cmd_serve(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  auto models = std::make_shared<const Models>(load_trained(cfg));
  PersonalizationService service(models, cfg.models_checkpoint().stem().string(),
                                 cfg.service.snapshot.empty() ? fs::path{} : fs::path(cfg.service.snapshot));
  httplib::Server server;
  register_routes(server, service, {cfg.service.max_image_side, true});
  if (!server.bind_to_port(cfg.service.host, cfg.service.port))
    throw std::runtime_error("cannot bind " + cfg.service.host + ":" + std::to_string(cfg.service.port));
  log << "serving model '" << service.model_id() << "' on http://" << cfg.service.host << ':' << cfg.service.port
      << std::endl;
  server.listen_after_bind();
}

void cmd_enhance(const RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& pairs,
                 const std::string& input, const std::string& output, const std::string& method, std::ostream& log) {
  if (pairs.empty()) throw InvalidInput("enhance: give at least one preferred pair");
  const Image unseen = read_png(input);
  PreferredSet prefs;
  prefs.user_label = "cli";
  if (method == "pienet") {
    if (!fs::exists(cfg.pienet_checkpoint()))
      throw MissingArtifact("PieNet baseline not found: " + cfg.pienet_checkpoint().string());
    const PieNetModels pienet = load_pienet(cfg.pienet_checkpoint());
    for (const auto& [x, y] : pairs) prefs.pairs.push_back({read_png(x), read_png(y), -1});
    write_png(personalize_pienet(pienet, prefs, unseen), output);
    return;
  }
  const Models models = load_trained(cfg);
  const int side = models.config.enhancer_input_size;
  for (const auto& [x, y] : pairs) prefs.pairs.push_back({fit_square(read_png(x), side), fit_square(read_png(y), side), -1});
  Image result;
  if (method == "masked") {
    const MaskedResult r = personalize_masked(models, prefs, unseen);
    result = r.image;
    log << "attention:";
    for (double w : r.attention) log << ' ' << w;
    log << '\n';
  } else if (method == "average") {
    result = personalize_average(models, prefs, unseen);
  } else if (method == "weighted") {
    result = personalize_weighted(models, prefs, unseen);
  } else {
    throw ConfigError("method", "must be one of masked, average, weighted, pienet");
  }
  write_png(result, output);
  log << "wrote " << output << '\n';
}

std::vector<std::pair<std::string, std::string>> pairs_in_directory(const std::string& dir) {
  if (!fs::is_directory(dir)) throw MissingArtifact("pairs directory not found: " + dir);
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<fs::path> originals;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 6 && name.ends_with("_x.png")) originals.push_back(e.path());
  }
  std::sort(originals.begin(), originals.end());
  for (const auto& x : originals) {
    std::string y = x.string();
    y.replace(y.size() - 6, 6, "_y.png");
    if (fs::exists(y)) out.emplace_back(x.string(), y);
  }
  return out;
}

}  // namespace msm
