#pragma once

// On-disk corpus: corpus/<user_id>/<index>_{x,y}.png plus manifest.json.

#include "msm/corpus/corpus.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace msm {

inline constexpr const char* kManifestFormat = "msm-corpus-v1";

/// Writes PNGs and manifest.json under dir. run_config is echoed verbatim.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                  const nlohmann::json& run_config = nlohmann::json::object());

nlohmann::json corpus_manifest(const Corpus& corpus, const nlohmann::json& run_config = nlohmann::json::object());

/// Throws MissingArtifact when dir/manifest.json is absent, DecodeError when malformed.
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace msm
