#pragma once

// Merged configuration of a full run. Loaded from one JSON file with
// "section.key=value" overrides; cross-field invariants are checked at load.

#include "msm/json_io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace msm {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string snapshot;  ///< optional JSON file for session persistence
  int max_image_side = 1024;

  bool operator==(const ServiceConfig&) const = default;
};

struct RunConfig {
  std::string workdir = "run";
  CorpusConfig corpus;
  DegraderConfig degrader;
  NetConfig net;
  TrainConfig train;
  LossConfig loss;
  PieNetConfig pienet;
  bool train_pienet = false;
  BenchmarkConfig benchmark;
  ServiceConfig service;

  /// Per-section checks plus the cross-field ones.
  void validate() const;

  std::filesystem::path corpus_dir() const { return std::filesystem::path(workdir) / "corpus"; }
  std::filesystem::path models_dir() const { return std::filesystem::path(workdir) / "models"; }
  std::filesystem::path reports_dir() const { return std::filesystem::path(workdir) / "reports"; }
  std::filesystem::path step1_checkpoint() const { return models_dir() / "step1.msm"; }
  std::filesystem::path models_checkpoint() const { return models_dir() / "models.msm"; }
  std::filesystem::path pienet_checkpoint() const { return models_dir() / "pienet.msm"; }
  std::filesystem::path metrics_log() const { return models_dir() / "metrics.json"; }
};

nlohmann::json run_config_to_json(const RunConfig& c);
/// Unknown sections or keys raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);

/// Applies "section.key=value" (or "key=value" for top-level keys). The value
/// is parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Reads path (empty: defaults), applies overrides, validates.
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace msm
