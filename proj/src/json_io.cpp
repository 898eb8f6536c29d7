#include "msm/json_io.hpp"

#include "msm/errors.hpp"

namespace msm {

using json_detail::read;

void to_json(nlohmann::json& j, const NetConfig& c) {
  j = {{"style_dim", c.style_dim},
       {"content_dim", c.content_dim},
       {"grid", c.grid},
       {"transformer_layers", c.transformer_layers},
       {"heads", c.heads},
       {"ff_dim", c.ff_dim},
       {"enhancer_levels", c.enhancer_levels},
       {"base_channels", c.base_channels},
       {"embed_channels", c.embed_channels},
       {"embed_input_size", c.embed_input_size},
       {"enhancer_input_size", c.enhancer_input_size},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, NetConfig& c) {
  read(j, "net", "style_dim", c.style_dim);
  read(j, "net", "content_dim", c.content_dim);
  read(j, "net", "grid", c.grid);
  read(j, "net", "transformer_layers", c.transformer_layers);
  read(j, "net", "heads", c.heads);
  read(j, "net", "ff_dim", c.ff_dim);
  read(j, "net", "enhancer_levels", c.enhancer_levels);
  read(j, "net", "base_channels", c.base_channels);
  read(j, "net", "embed_channels", c.embed_channels);
  read(j, "net", "embed_input_size", c.embed_input_size);
  read(j, "net", "enhancer_input_size", c.enhancer_input_size);
  read(j, "net", "seed", c.seed);
}

void to_json(nlohmann::json& j, const RetouchParams& p) {
  j = {{"gamma", p.gamma},
       {"exposure_ev", p.exposure_ev},
       {"contrast", p.contrast},
       {"saturation", p.saturation},
       {"temperature_shift", p.temperature_shift},
       {"tone_curve_knots", nlohmann::json::array()}};
  for (const auto& [in, out] : p.tone_curve_knots) j["tone_curve_knots"].push_back({in, out});
}

void from_json(const nlohmann::json& j, RetouchParams& p) {
  read(j, "retouch", "gamma", p.gamma);
  read(j, "retouch", "exposure_ev", p.exposure_ev);
  read(j, "retouch", "contrast", p.contrast);
  read(j, "retouch", "saturation", p.saturation);
  read(j, "retouch", "temperature_shift", p.temperature_shift);
  p.tone_curve_knots.clear();
  if (auto it = j.find("tone_curve_knots"); it != j.end()) {
    try {
      for (const auto& k : *it) p.tone_curve_knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("retouch.tone_curve_knots", "must be a list of [in, out] number pairs");
    }
  }
}

void to_json(nlohmann::json& j, const CorpusConfig& c) {
  j = {{"n_users", c.n_users},
       {"images_per_user", c.images_per_user},
       {"n_test_users", c.n_test_users},
       {"test_images_per_user", c.test_images_per_user},
       {"image_size", c.image_size},
       {"n_content_classes", c.n_content_classes},
       {"content_aware_fraction", c.content_aware_fraction},
       {"degrader_originals", c.degrader_originals},
       {"degrader_draws", c.degrader_draws},
       {"pseudo_pairs", c.pseudo_pairs},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, CorpusConfig& c) {
  read(j, "corpus", "n_users", c.n_users);
  read(j, "corpus", "images_per_user", c.images_per_user);
  read(j, "corpus", "n_test_users", c.n_test_users);
  read(j, "corpus", "test_images_per_user", c.test_images_per_user);
  read(j, "corpus", "image_size", c.image_size);
  read(j, "corpus", "n_content_classes", c.n_content_classes);
  read(j, "corpus", "content_aware_fraction", c.content_aware_fraction);
  read(j, "corpus", "degrader_originals", c.degrader_originals);
  read(j, "corpus", "degrader_draws", c.degrader_draws);
  read(j, "corpus", "pseudo_pairs", c.pseudo_pairs);
  read(j, "corpus", "seed", c.seed);
}

void to_json(nlohmann::json& j, const DegraderConfig& c) {
  j = {{"width", c.width}, {"epochs", c.epochs}, {"batch", c.batch}, {"lr", c.lr}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, DegraderConfig& c) {
  read(j, "degrader", "width", c.width);
  read(j, "degrader", "epochs", c.epochs);
  read(j, "degrader", "batch", c.batch);
  read(j, "degrader", "lr", c.lr);
  read(j, "degrader", "seed", c.seed);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"lr", c.lr},
       {"epochs_step1", c.epochs_step1},
       {"epochs_step2", c.epochs_step2},
       {"batch_step1", c.batch_step1},
       {"batch_step2", c.batch_step2},
       {"i_train", c.i_train},
       {"samples_per_epoch_step2", c.samples_per_epoch_step2},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  read(j, "train", "lr", c.lr);
  read(j, "train", "epochs_step1", c.epochs_step1);
  read(j, "train", "epochs_step2", c.epochs_step2);
  read(j, "train", "batch_step1", c.batch_step1);
  read(j, "train", "batch_step2", c.batch_step2);
  read(j, "train", "i_train", c.i_train);
  read(j, "train", "samples_per_epoch_step2", c.samples_per_epoch_step2);
  read(j, "train", "seed", c.seed);
}

void to_json(nlohmann::json& j, const LossConfig& c) {
  j = {{"w_color", c.w_color},
       {"w_perceptual", c.w_perceptual},
       {"w_tv", c.w_tv},
       {"perceptual_channels", c.perceptual_channels},
       {"perceptual_seed", c.perceptual_seed}};
}

void from_json(const nlohmann::json& j, LossConfig& c) {
  read(j, "loss", "w_color", c.w_color);
  read(j, "loss", "w_perceptual", c.w_perceptual);
  read(j, "loss", "w_tv", c.w_tv);
  read(j, "loss", "perceptual_channels", c.perceptual_channels);
  read(j, "loss", "perceptual_seed", c.perceptual_seed);
}

void to_json(nlohmann::json& j, const PieNetConfig& c) {
  j = {{"alpha", c.alpha},
       {"epochs_triplet", c.epochs_triplet},
       {"epochs_enhancer", c.epochs_enhancer},
       {"batch", c.batch},
       {"lr", c.lr},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, PieNetConfig& c) {
  read(j, "pienet", "alpha", c.alpha);
  read(j, "pienet", "epochs_triplet", c.epochs_triplet);
  read(j, "pienet", "epochs_enhancer", c.epochs_enhancer);
  read(j, "pienet", "batch", c.batch);
  read(j, "pienet", "lr", c.lr);
  read(j, "pienet", "seed", c.seed);
}

void to_json(nlohmann::json& j, const BenchmarkConfig& c) {
  j = {{"i_new_values", c.i_new_values},
       {"n_samplings", c.n_samplings},
       {"seed", c.seed},
       {"methods", c.methods},
       {"category_split", c.category_split},
       {"category_i_new", c.category_i_new}};
}

void from_json(const nlohmann::json& j, BenchmarkConfig& c) {
  read(j, "benchmark", "i_new_values", c.i_new_values);
  read(j, "benchmark", "n_samplings", c.n_samplings);
  read(j, "benchmark", "seed", c.seed);
  read(j, "benchmark", "methods", c.methods);
  read(j, "benchmark", "category_split", c.category_split);
  read(j, "benchmark", "category_i_new", c.category_i_new);
}

}  // namespace msm
