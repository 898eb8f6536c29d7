#pragma once

// Session-oriented personalization over a frozen model. Sessions hold a
// mutable preferred set; enhancement reads a snapshot of it, so requests on
// different sessions never contend and mutations of one session serialize.

#include "msm/personalize/personalize.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace msm {

/// Error with an HTTP status and a short machine-readable code.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct Session {
  std::string session_id;
  std::string model_id;
  std::chrono::system_clock::time_point created_at;
  PreferredSet prefs;
  mutable std::mutex mutex;
};

struct EnhanceOutcome {
  Image image;
  std::string method;
  StyleEmbedding style;
  double style_norm = 0.0;
  std::optional<std::vector<double>> attention;  ///< masked method only
  int i_new = 0;
};

class PersonalizationService {
 public:
  /// snapshot: optional JSON file; loaded when present, rewritten after every mutation.
  PersonalizationService(std::shared_ptr<const Models> models, std::string model_id,
                         std::filesystem::path snapshot = {});

  const std::string& model_id() const { return model_id_; }
  const Models& models() const { return *models_; }

  /// Empty model_id selects the loaded model. Unknown ids raise 404.
  std::string create_session(const std::string& model_id = "");
  /// Images are resized to the model's working resolution and quantized to 8 bits. Returns the new pair count.
  int add_pair(const std::string& session_id, const Image& original, const Image& retouched);
  /// Returns the remaining pair count.
  int remove_pair(const std::string& session_id, int index);
  int pair_count(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

  /// method: masked | average | weighted. An empty session raises 409.
  EnhanceOutcome enhance_unseen(const std::string& session_id, const Image& unseen, const std::string& method) const;

  nlohmann::json snapshot_json() const;
  void restore_snapshot(const nlohmann::json& j);

 private:
  std::shared_ptr<Session> find(const std::string& session_id) const;
  void persist() const;

  std::shared_ptr<const Models> models_;
  std::string model_id_;
  std::filesystem::path snapshot_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  mutable std::mutex persist_mutex_;
};

std::string new_session_id();

}  // namespace msm
