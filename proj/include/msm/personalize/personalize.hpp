#pragma once

// Test-time personalization from a new user's preferred pairs: masked style
// prediction, the plain style average, the content-weighted average and the
// PieNet baseline with per-user preference vectors.

#include "msm/corpus/corpus.hpp"
#include "msm/nets/models.hpp"
#include "msm/training/training.hpp"

#include <filesystem>
#include <vector>

namespace msm {

struct PreferenceVector {
  Eigen::RowVectorXf values;
};

/// Embeddings of a preferred set, computed once and reused for many unseen images.
struct PreparedPreferences {
  std::vector<ContentEmbedding> contents;
  std::vector<StyleEmbedding> styles;

  std::size_t size() const { return styles.size(); }
};

PreparedPreferences prepare_preferences(const Models& m, const PreferredSet& prefs);

struct MaskedResult {
  Image image;
  StyleEmbedding style;
  std::vector<double> attention;  ///< rollout weights over the preferred pairs
};

MaskedResult personalize_masked(const Models& m, const PreferredSet& prefs, const Image& unseen);
MaskedResult personalize_masked(const Models& m, const PreparedPreferences& prep, const Image& unseen);
StyleEmbedding masked_style(const Models& m, const PreparedPreferences& prep, const ContentEmbedding& unseen,
                            std::vector<double>* attention = nullptr);

/// Mean of the preferred styles, independent of the unseen image.
Image personalize_average(const Models& m, const PreferredSet& prefs, const Image& unseen);
StyleEmbedding average_style(const PreparedPreferences& prep);

inline constexpr double kWeightFloor = 1e-6;

/// w_i = cos(c_i, c_unseen); falls back to uniform weights when sum(w) <= kWeightFloor.
std::vector<double> cosine_weights(const PreparedPreferences& prep, const ContentEmbedding& unseen);
Image personalize_weighted(const Models& m, const PreferredSet& prefs, const Image& unseen);
StyleEmbedding weighted_style(const PreparedPreferences& prep, const ContentEmbedding& unseen);

struct PieNetConfig {
  double alpha = 0.2;       ///< triplet margin
  int epochs_triplet = 10;
  int epochs_enhancer = 10;
  int batch = 16;
  double lr = 1e-4;
  std::uint64_t seed = 5;

  void validate() const;
  bool operator==(const PieNetConfig&) const = default;
};

/// PieNet baseline: absolute style encoder f(y) clustered around per-user
/// preference vectors by a triplet loss, then an enhancer trained to render
/// each user's pairs from that user's vector.
struct PieNetModels {
  NetConfig config;
  nets::StyleNet<float> style;
  nets::Enhancer<float> enhancer;
  std::vector<PreferenceVector> user_vectors;
  std::vector<double> triplet_losses;   ///< per epoch, first entry at initialization
  std::vector<double> enhancer_losses;
};

/// Mean triplet loss [|f(y) - v_n|^2 - |f(y') - v_n|^2 + alpha]_+ of one anchor.
double triplet_term(const Eigen::RowVectorXf& anchor, const Eigen::RowVectorXf& negative,
                    const Eigen::RowVectorXf& vector, double alpha);

PieNetModels train_pienet_baseline(const Corpus& corpus, const NetConfig& net, const PieNetConfig& cfg,
                                   const LossConfig& loss);
PreferenceVector pienet_preference(const PieNetModels& m, const PreferredSet& prefs);
Image personalize_pienet(const PieNetModels& m, const PreferredSet& prefs, const Image& unseen);
Image personalize_pienet(const PieNetModels& m, const PreferenceVector& v, const Image& unseen);

void save_pienet(const PieNetModels& m, const std::filesystem::path& path);
PieNetModels load_pienet(const std::filesystem::path& path);

}  // namespace msm
