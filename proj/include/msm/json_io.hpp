#pragma once

// JSON mappings for configuration and parameter structs. Parsing is strict:
// unknown keys are ignored, but a present key of the wrong type or an
// out-of-range value raises ConfigError naming "<section>.<key>".

#include "msm/corpus/corpus.hpp"
#include "msm/corpus/degrader.hpp"
#include "msm/errors.hpp"
#include "msm/eval/benchmark.hpp"
#include "msm/imaging/retouch.hpp"
#include "msm/nets/config.hpp"
#include "msm/personalize/personalize.hpp"
#include "msm/training/training.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace msm {

namespace json_detail {

template <typename T>
void read(const nlohmann::json& j, const char* section, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(section) + "." + key, "has the wrong type: " + it->dump());
  }
}

}  // namespace json_detail

void to_json(nlohmann::json& j, const NetConfig& c);
void from_json(const nlohmann::json& j, NetConfig& c);

void to_json(nlohmann::json& j, const RetouchParams& p);
void from_json(const nlohmann::json& j, RetouchParams& p);

void to_json(nlohmann::json& j, const CorpusConfig& c);
void from_json(const nlohmann::json& j, CorpusConfig& c);

void to_json(nlohmann::json& j, const DegraderConfig& c);
void from_json(const nlohmann::json& j, DegraderConfig& c);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);

void to_json(nlohmann::json& j, const PieNetConfig& c);
void from_json(const nlohmann::json& j, PieNetConfig& c);

void to_json(nlohmann::json& j, const BenchmarkConfig& c);
void from_json(const nlohmann::json& j, BenchmarkConfig& c);

}  // namespace msm
