#pragma once

#include "msm/ad/tape.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace msm {

inline constexpr const char* kCheckpointFormat = "msm-v1";

/// Layout:
///   line 1: "msm-v1"
///   line 2: byte length of the header JSON
///   header JSON: {"format", "kind", "config", "meta", "tensors": [{name, rows, cols}]}
///   tensor payloads: float32 little-endian, column-major, in header order
struct Checkpoint {
  std::string kind;
  nlohmann::json config;
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, ad::Matrix<float>> tensors;
  std::vector<std::string> order;

  void add(const ad::ParamSet<float>& params);
  /// Copies tensors into params by name; throws DecodeError on a missing name or shape mismatch.
  void restore(ad::ParamSet<float>& params) const;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws MissingArtifact when absent, DecodeError when malformed.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace msm
