#pragma once

// The four trainable components of masked style modeling, templated on the
// scalar type (float for training and inference, double for gradient checks).

#include "msm/nets/config.hpp"
#include "msm/nets/layers.hpp"

#include <vector>

namespace msm::nets {

/// Style encoder f_st: convolutional trunk, global average pooling, linear head.
template <typename S>
class StyleNet {
 public:
  StyleNet() = default;
  StyleNet(const NetConfig& cfg, StyleMode mode, Rng& rng);

  /// f_st(image) as a (1, D_s) row.
  Var<S> encode(Bound<S>& b, Var<S> image) const;
  /// Residual mode: f(y) - f(x). Absolute mode: f(y).
  Var<S> embed(Bound<S>& b, Var<S> original, Var<S> retouched) const;

  StyleMode mode() const { return mode_; }
  ParamSet<S>& params() { return params_; }
  const ParamSet<S>& params() const { return params_; }

 private:
  StyleMode mode_ = StyleMode::Residual;
  ParamSet<S> params_;
  Conv<S> stem_, down1_, down2_;
  Linear<S> head_;
};

/// Content encoder f_co: downsamples to an 8x8 map, reduces channels to
/// D_c / l^2, box-pools to l x l and flattens pixel-major to length D_c.
template <typename S>
class ContentNet {
 public:
  ContentNet() = default;
  ContentNet(const NetConfig& cfg, Rng& rng);

  Var<S> embed(Bound<S>& b, Var<S> image) const;

  int grid() const { return grid_; }
  ParamSet<S>& params() { return params_; }
  const ParamSet<S>& params() const { return params_; }

 private:
  int grid_ = 2;
  int input_size_ = 64;
  ParamSet<S> params_;
  Conv<S> stem_;
  std::vector<Conv<S>> stages_;
  Conv<S> reduce_;
};

/// Per-layer attention, averaged over heads; rows/cols index tokens.
struct AttentionTrace {
  std::vector<Eigen::MatrixXd> layers;
};

/// Pre-norm Transformer encoder over (content ++ style) token rows with a
/// learnable masked style token and an affine head on the last row.
template <typename S>
class MaskedTransformer {
 public:
  MaskedTransformer() = default;
  MaskedTransformer(const NetConfig& cfg, Rng& rng);

  /// Rows c_i ++ s_i for the preferred pairs, then c_unseen ++ s_masked.
  Var<S> assemble(Bound<S>& b, const std::vector<Var<S>>& contents, const std::vector<Var<S>>& styles,
                  Var<S> unseen_content) const;
  /// Predicted style of the last (masked) row, (1, D_s).
  Var<S> predict(Bound<S>& b, Var<S> tokens, AttentionTrace* trace = nullptr) const;

  int masked_token_index() const { return masked_token_; }
  int style_dim() const { return style_dim_; }
  int content_dim() const { return content_dim_; }
  int layers() const { return static_cast<int>(blocks_.size()); }
  ParamSet<S>& params() { return params_; }
  const ParamSet<S>& params() const { return params_; }

 private:
  struct Block {
    LayerNorm<S> ln1, ln2;
    Linear<S> q, k, v, o, ff1, ff2;
  };
  int style_dim_ = 0, content_dim_ = 0, heads_ = 1;
  ParamSet<S> params_;
  int masked_token_ = -1;
  std::vector<Block> blocks_;
  LayerNorm<S> final_ln_;
  Linear<S> head_;
};

/// Stylized enhancer f_en: U-net whose skip connections receive a linear,
/// bias-free projection of the style vector added to every pixel. The
/// output is the input plus a learned residual, clamped to [0, 1].
template <typename S>
class Enhancer {
 public:
  Enhancer() = default;
  Enhancer(const NetConfig& cfg, Rng& rng);

  Var<S> forward(Bound<S>& b, Var<S> image, Var<S> style, bool inject_style = true) const;

  int levels() const { return static_cast<int>(encoder_.size()); }
  ParamSet<S>& params() { return params_; }
  const ParamSet<S>& params() const { return params_; }

 private:
  struct Stage {
    Conv<S> a, b;
  };
  ParamSet<S> params_;
  std::vector<Stage> encoder_;
  std::vector<Stage> decoder_;      // decoder_[i] produces level i, i < levels-1
  std::vector<Linear<S>> inject_;   // inject_[i] projects style to level-i channels
  Conv<S> out_;
};

}  // namespace msm::nets
