#pragma once

// Image-level API over the four networks: embeddings, token assembly,
// masked style prediction, rendering and attention rollout.

#include "msm/imaging/image.hpp"
#include "msm/nets/networks.hpp"

#include <filesystem>
#include <utility>
#include <vector>

namespace msm {

struct StyleEmbedding {
  Eigen::RowVectorXf values;
};

/// l x l grid of D_c / l^2 features, flattened pixel-major.
struct ContentEmbedding {
  Eigen::RowVectorXf values;
};

/// (I+1) x (D_c + D_s) token matrix; the last row carries the masked style token.
struct TransformerInput {
  Eigen::MatrixXf rows;
  int content_dim = 0;
  int style_dim = 0;

  int masked_row() const { return static_cast<int>(rows.rows()) - 1; }
  int preferred_count() const { return static_cast<int>(rows.rows()) - 1; }
};

/// The trained personalization pipeline (f_st, f_co, f_tr, f_en).
struct Models {
  NetConfig config;
  StyleMode style_mode = StyleMode::Residual;
  nets::StyleNet<float> style;
  nets::ContentNet<float> content;
  nets::MaskedTransformer<float> transformer;
  nets::Enhancer<float> enhancer;

  /// Freshly initialized networks, seeded from config.seed.
  static Models initialize(const NetConfig& config, StyleMode mode = StyleMode::Residual);
};

StyleEmbedding style_embed(const Models& m, const Image& original, const Image& retouched);
/// f_st(image) alone (the PieNet-style absolute embedding).
StyleEmbedding style_encode(const Models& m, const Image& image);
ContentEmbedding content_embed(const Models& m, const Image& image);

TransformerInput build_input(const Models& m, const std::vector<std::pair<ContentEmbedding, StyleEmbedding>>& pairs,
                             const ContentEmbedding& unseen);

StyleEmbedding predict_style(const Models& m, const TransformerInput& input, nets::AttentionTrace* trace = nullptr);

/// Renders x under style s. Inputs of another size are resampled to the
/// enhancer resolution and the result is resampled back.
Image enhance(const Models& m, const Image& x, const StyleEmbedding& s, bool inject_style = true);
/// enhance() for a bare enhancer working at side x side.
Image render(const nets::Enhancer<float>& net, int side, const Image& x, const Eigen::RowVectorXf& style,
             bool inject_style = true);

/// Rollout of head-averaged attention (each layer mixed with the identity and
/// row-normalized), read from the masked row and renormalized over the
/// preferred rows. Length I, sums to 1.
std::vector<double> attention_rollout(const Models& m, const TransformerInput& input);
std::vector<double> rollout_from_trace(const nets::AttentionTrace& trace);

// msm-v1 single-file checkpoint: config JSON plus named float32 tensors.
void save_models(const Models& m, const std::filesystem::path& path, const std::string& extra_json = "{}");
Models load_models(const std::filesystem::path& path);

}  // namespace msm
