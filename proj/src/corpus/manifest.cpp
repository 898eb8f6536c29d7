#include "msm/corpus/manifest.hpp"

#include "msm/errors.hpp"
#include "msm/imaging/png_io.hpp"
#include "msm/json_io.hpp"

#include <fstream>

namespace msm {

namespace fs = std::filesystem;

namespace {

std::string pair_path(int user, std::size_t index, char side) {
  return std::to_string(user) + "/" + std::to_string(index) + "_" + side + ".png";
}

}  // namespace

nlohmann::json corpus_manifest(const Corpus& corpus, const nlohmann::json& run_config) {
  nlohmann::json j;
  j["format"] = kManifestFormat;
  j["config"] = corpus.config;
  j["run_config"] = run_config;
  j["users"] = nlohmann::json::array();
  for (const auto& rec : corpus.users) {
    nlohmann::json u;
    u["user_id"] = rec.user.user_id;
    u["label"] = rec.set.user_label;
    u["split"] = rec.held_out ? "test" : "train";
    u["content_aware"] = rec.user.content_aware;
    u["pseudo_originals"] = rec.pseudo_originals;
    u["style_table"] = nlohmann::json::object();
    for (const auto& [cls, params] : rec.user.style_table) u["style_table"][std::to_string(cls)] = params;
    u["pairs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < rec.set.pairs.size(); ++i) {
      const auto& p = rec.set.pairs[i];
      u["pairs"].push_back({{"original", pair_path(rec.user.user_id, i, 'x')},
                            {"retouched", pair_path(rec.user.user_id, i, 'y')},
                            {"content_class", p.content_class},
                            {"params", rec.user.params_for(p.content_class)}});
    }
    j["users"].push_back(std::move(u));
  }
  return j;
}

void write_corpus(const Corpus& corpus, const fs::path& dir, const nlohmann::json& run_config) {
  fs::create_directories(dir);
  const nlohmann::json manifest = corpus_manifest(corpus, run_config);
  for (std::size_t u = 0; u < corpus.users.size(); ++u) {
    const auto& rec = corpus.users[u];
    fs::create_directories(dir / std::to_string(rec.user.user_id));
    const auto& pairs = manifest["users"][u]["pairs"];
    for (std::size_t i = 0; i < rec.set.pairs.size(); ++i) {
      write_png(rec.set.pairs[i].original, dir / pairs[i]["original"].get<std::string>());
      write_png(rec.set.pairs[i].retouched, dir / pairs[i]["retouched"].get<std::string>());
    }
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(1) << '\n';
}

Corpus read_corpus(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw MissingArtifact("corpus manifest not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError("corpus manifest is not JSON: " + std::string(e.what()));
  }
  if (j.value("format", "") != kManifestFormat) throw DecodeError("corpus manifest has an unsupported format tag");
  Corpus corpus;
  try {
    corpus.config = j.at("config").get<CorpusConfig>();
    for (const auto& u : j.at("users")) {
      UserRecord rec;
      rec.user.user_id = u.at("user_id");
      rec.user.content_aware = u.at("content_aware");
      for (const auto& [cls, params] : u.at("style_table").items())
        rec.user.style_table[std::stoi(cls)] = params.get<RetouchParams>();
      rec.set.user_label = u.at("label");
      rec.held_out = u.at("split") == "test";
      rec.pseudo_originals = u.at("pseudo_originals");
      for (const auto& p : u.at("pairs")) {
        PreferredPair pair;
        pair.content_class = p.at("content_class");
        pair.original = read_png(dir / p.at("original").get<std::string>());
        pair.retouched = read_png(dir / p.at("retouched").get<std::string>());
        rec.set.pairs.push_back(std::move(pair));
      }
      rec.set.validate();
      corpus.users.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError("corpus manifest is malformed: " + std::string(e.what()));
  }
  return corpus;
}

}  // namespace msm
