#include "msm/service/service.hpp"

#include "msm/errors.hpp"
#include "msm/imaging/png_io.hpp"

#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace msm {

std::string new_session_id() {
  static std::mutex mu;
  static std::random_device device;
  static std::mt19937_64 rng(device());
  std::lock_guard<std::mutex> lock(mu);
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << rng() << std::setw(16) << rng();
  return os.str();
}

PersonalizationService::PersonalizationService(std::shared_ptr<const Models> models, std::string model_id,
                                               std::filesystem::path snapshot)
    : models_(std::move(models)), model_id_(std::move(model_id)), snapshot_(std::move(snapshot)) {
  if (!models_) throw InvalidInput("service: no model loaded");
  if (!snapshot_.empty() && std::filesystem::exists(snapshot_)) {
    std::ifstream in(snapshot_);
    try {
      restore_snapshot(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw DecodeError("session snapshot is not valid JSON: " + std::string(e.what()));
    }
  }
}

std::shared_ptr<Session> PersonalizationService::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ServiceError(404, "session_not_found", "no session with id '" + session_id + "'");
  return it->second;
}

std::string PersonalizationService::create_session(const std::string& model_id) {
  if (!model_id.empty() && model_id != model_id_)
    throw ServiceError(404, "model_not_found", "unknown model '" + model_id + "'");
  auto s = std::make_shared<Session>();
  s->session_id = new_session_id();
  s->model_id = model_id_;
  s->created_at = std::chrono::system_clock::now();
  s->prefs.user_label = s->session_id;
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_[s->session_id] = s;
  }
  persist();
  return s->session_id;
}

int PersonalizationService::add_pair(const std::string& session_id, const Image& original, const Image& retouched) {
  auto s = find(session_id);
  const int side = models_->config.enhancer_input_size;
  // Stored on the 8-bit grid so a snapshot restores the pair exactly.
  PreferredPair pair{fit_square(original, side).quantized(), fit_square(retouched, side).quantized(), -1};
  int count = 0;
  {
    std::lock_guard<std::mutex> lock(s->mutex);
    s->prefs.pairs.push_back(std::move(pair));
    count = static_cast<int>(s->prefs.size());
  }
  persist();
  return count;
}

int PersonalizationService::remove_pair(const std::string& session_id, int index) {
  auto s = find(session_id);
  int count = 0;
  {
    std::lock_guard<std::mutex> lock(s->mutex);
    if (index < 0 || index >= static_cast<int>(s->prefs.size()))
      throw ServiceError(404, "pair_not_found", "session has no pair at index " + std::to_string(index));
    s->prefs.pairs.erase(s->prefs.pairs.begin() + index);
    count = static_cast<int>(s->prefs.size());
  }
  persist();
  return count;
}

int PersonalizationService::pair_count(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard<std::mutex> lock(s->mutex);
  return static_cast<int>(s->prefs.size());
}

std::vector<std::string> PersonalizationService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

EnhanceOutcome PersonalizationService::enhance_unseen(const std::string& session_id, const Image& unseen,
                                                      const std::string& method) const {
  if (method != "masked" && method != "average" && method != "weighted")
    throw ServiceError(400, "bad_method", "method must be one of masked, average, weighted");
  auto s = find(session_id);
  PreferredSet prefs;
  {
    std::lock_guard<std::mutex> lock(s->mutex);
    prefs = s->prefs;
  }
  if (prefs.empty())
    throw ServiceError(409, "empty_session", "the session has no preferred pairs yet; add at least one pair first");

  const Models& m = *models_;
  const PreparedPreferences prep = prepare_preferences(m, prefs);
  EnhanceOutcome out;
  out.method = method;
  out.i_new = static_cast<int>(prefs.size());
  if (method == "masked") {
    std::vector<double> attention;
    out.style = masked_style(m, prep, content_embed(m, unseen), &attention);
    out.attention = std::move(attention);
  } else if (method == "average") {
    out.style = average_style(prep);
  } else {
    out.style = weighted_style(prep, content_embed(m, unseen));
  }
  out.style_norm = out.style.values.cast<double>().norm();
  out.image = enhance(m, unseen, out.style);
  return out;
}

nlohmann::json PersonalizationService::snapshot_json() const {
  nlohmann::json j;
  j["model_id"] = model_id_;
  j["sessions"] = nlohmann::json::array();
  std::shared_lock lock(sessions_mutex_);
  for (const auto& [id, s] : sessions_) {
    std::lock_guard<std::mutex> slock(s->mutex);
    nlohmann::json js;
    js["session_id"] = id;
    js["model_id"] = s->model_id;
    js["created_at"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(s->created_at.time_since_epoch()).count();
    js["pairs"] = nlohmann::json::array();
    for (const auto& p : s->prefs.pairs)
      js["pairs"].push_back(
          {{"original", base64_encode(encode_png(p.original))}, {"retouched", base64_encode(encode_png(p.retouched))}});
    j["sessions"].push_back(std::move(js));
  }
  return j;
}

void PersonalizationService::restore_snapshot(const nlohmann::json& j) {
  std::unique_lock lock(sessions_mutex_);
  for (const auto& js : j.at("sessions")) {
    auto s = std::make_shared<Session>();
    s->session_id = js.at("session_id");
    s->model_id = js.value("model_id", model_id_);
    s->created_at = std::chrono::system_clock::time_point(std::chrono::milliseconds(js.value("created_at", 0LL)));
    s->prefs.user_label = s->session_id;
    for (const auto& p : js.at("pairs"))
      s->prefs.pairs.push_back({decode_png(base64_decode(p.at("original").get<std::string>())),
                                decode_png(base64_decode(p.at("retouched").get<std::string>())), -1});
    sessions_[s->session_id] = s;
  }
}

void PersonalizationService::persist() const {
  if (snapshot_.empty()) return;
  const nlohmann::json j = snapshot_json();
  std::lock_guard<std::mutex> lock(persist_mutex_);
  const auto tmp = snapshot_.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write session snapshot " + tmp);
    out << j.dump();
  }
  std::filesystem::rename(tmp, snapshot_);
}

}  // namespace msm
