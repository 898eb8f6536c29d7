#include "msm/run_config.hpp"

#include <fstream>

namespace msm {

using json_detail::read;

namespace {

void check_known_keys(const nlohmann::json& j, const nlohmann::json& reference, const std::string& prefix) {
  if (!j.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const std::string field = prefix.empty() ? key : prefix + "." + key;
    auto it = reference.find(key);
    if (it == reference.end()) throw ConfigError(field, "is not a known setting");
    if (it->is_object()) check_known_keys(value, *it, field);
  }
}

template <typename T>
void read_section(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    if (!it->is_object()) throw ConfigError(key, "must be a JSON object");
    from_json(*it, out);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (workdir.empty()) throw ConfigError("workdir", "must not be empty");
  corpus.validate();
  degrader.validate();
  net.validate();
  train.validate();
  loss.validate();
  pienet.validate();
  benchmark.validate();
  if (service.port < 0 || service.port > 65535) throw ConfigError("service.port", "must lie in [0, 65535]");
  if (service.max_image_side < Image::kMinSide) throw ConfigError("service.max_image_side", "must be at least 8");

  if (corpus.images_per_user < train.i_train + 1)
    throw ConfigError("corpus.images_per_user", "must be at least train.i_train + 1 = " +
                                                    std::to_string(train.i_train + 1));
  if (corpus.n_test_users < 1) throw ConfigError("corpus.n_test_users", "evaluation needs at least one held-out user");
  for (int v : benchmark.i_new_values)
    if (v >= corpus.test_images_per_user)
      throw ConfigError("benchmark.i_new_values", "I_new = " + std::to_string(v) +
                                                      " leaves no unseen pairs; raise corpus.test_images_per_user");
  if (benchmark.category_split) {
    const int per_class = corpus.test_images_per_user / corpus.n_content_classes;
    if (benchmark.category_i_new > corpus.test_images_per_user - per_class - 1)
      throw ConfigError("benchmark.category_i_new", "too large for the pairs left after excluding one class");
  }
  for (const auto& m : benchmark.methods)
    if (m == "pienet" && !train_pienet)
      throw ConfigError("benchmark.methods", "'pienet' requires train_pienet = true");
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  return {{"workdir", c.workdir},
          {"corpus", c.corpus},
          {"degrader", c.degrader},
          {"net", c.net},
          {"train", c.train},
          {"loss", c.loss},
          {"pienet", c.pienet},
          {"train_pienet", c.train_pienet},
          {"benchmark", c.benchmark},
          {"service",
           {{"host", c.service.host},
            {"port", c.service.port},
            {"snapshot", c.service.snapshot},
            {"max_image_side", c.service.max_image_side}}}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  check_known_keys(j, run_config_to_json(RunConfig{}), "");
  RunConfig c;
  read(j, "run", "workdir", c.workdir);
  read(j, "run", "train_pienet", c.train_pienet);
  read_section(j, "corpus", c.corpus);
  read_section(j, "degrader", c.degrader);
  read_section(j, "net", c.net);
  read_section(j, "train", c.train);
  read_section(j, "loss", c.loss);
  read_section(j, "pienet", c.pienet);
  read_section(j, "benchmark", c.benchmark);
  if (auto it = j.find("service"); it != j.end()) {
    read(*it, "service", "host", c.service.host);
    read(*it, "service", "port", c.service.port);
    read(*it, "service", "snapshot", c.service.snapshot);
    read(*it, "service", "max_image_side", c.service.max_image_side);
  }
  return c;
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like section.key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(path, "empty key in override");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    nlohmann::json& child = (*node)[key];
    if (child.is_null()) child = nlohmann::json::object();
    node = &child;
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("config file not found: " + path.string());
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string(), std::string("is not valid JSON: ") + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  RunConfig c = run_config_from_json(j);
  c.validate();
  return c;
}

}  // namespace msm
