#include "msm/nets/networks.hpp"

#include "msm/errors.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace msm {

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ConfigError(std::string("net.") + field, message);
}

}  // namespace

void NetConfig::validate() const {
  require(style_dim > 0, "style_dim", "must be positive");
  require(content_dim > 0, "content_dim", "must be positive");
  require(grid == 1 || grid == 2 || grid == 4 || grid == 8, "grid", "must be one of 1, 2, 4, 8");
  require(content_dim % (grid * grid) == 0, "content_dim", "must be divisible by grid^2");
  require(transformer_layers >= 1, "transformer_layers", "must be >= 1");
  require(heads >= 1 && token_dim() % heads == 0, "heads", "must divide style_dim + content_dim");
  require(ff_dim >= 1, "ff_dim", "must be positive");
  require(enhancer_levels >= 2, "enhancer_levels", "must be >= 2");
  require(base_channels >= 1, "base_channels", "must be positive");
  require(embed_channels >= 1, "embed_channels", "must be positive");
  require(embed_input_size >= 8 && embed_input_size % 8 == 0 && is_pow2(embed_input_size / 8), "embed_input_size",
          "must be 8 * 2^k");
  require(enhancer_input_size >= 8 && enhancer_input_size % (1 << (enhancer_levels - 1)) == 0,
          "enhancer_input_size", "must be >= 8 and divisible by 2^(enhancer_levels-1)");
}

const char* to_string(StyleMode mode) { return mode == StyleMode::Residual ? "residual" : "absolute"; }

StyleMode style_mode_from_string(const char* name) {
  if (std::strcmp(name, "residual") == 0) return StyleMode::Residual;
  if (std::strcmp(name, "absolute") == 0) return StyleMode::Absolute;
  throw InvalidInput(std::string("unknown style mode: ") + name);
}

}  // namespace msm

namespace msm::nets {

// ---------------------------------------------------------------- StyleNet

template <typename S>
StyleNet<S>::StyleNet(const NetConfig& cfg, StyleMode mode, Rng& rng) : mode_(mode) {
  const int e = cfg.embed_channels;
  stem_ = Conv<S>::make(params_, "style.stem", 3, e, 3, 1, rng);
  down1_ = Conv<S>::make(params_, "style.down1", e, 2 * e, 3, 2, rng);
  down2_ = Conv<S>::make(params_, "style.down2", 2 * e, 4 * e, 3, 2, rng);
  head_ = Linear<S>::make(params_, "style.head", 4 * e, cfg.style_dim, rng);
}

template <typename S>
Var<S> StyleNet<S>::encode(Bound<S>& b, Var<S> image) const {
  Var<S> h = lrelu(stem_(b, image));
  h = lrelu(down1_(b, h));
  h = lrelu(down2_(b, h));
  return head_(b, ad::global_avg_pool(h));
}

template <typename S>
Var<S> StyleNet<S>::embed(Bound<S>& b, Var<S> original, Var<S> retouched) const {
  if (original.rows() != retouched.rows() || original.height() != retouched.height() ||
      original.width() != retouched.width())
    throw DimensionMismatch("style_embed: original and retouched differ in size");
  if (mode_ == StyleMode::Absolute) return encode(b, retouched);
  return ad::sub(encode(b, retouched), encode(b, original));
}

// ---------------------------------------------------------------- ContentNet

template <typename S>
ContentNet<S>::ContentNet(const NetConfig& cfg, Rng& rng) : grid_(cfg.grid), input_size_(cfg.embed_input_size) {
  const int e = cfg.embed_channels;
  stem_ = Conv<S>::make(params_, "content.stem", 3, e, 3, 1, rng);
  int ch = e;
  int i = 0;
  for (int size = cfg.embed_input_size; size > 8; size /= 2, ++i) {
    const int next = std::min(2 * ch, 4 * e);
    stages_.push_back(Conv<S>::make(params_, "content.stage" + std::to_string(i), ch, next, 3, 2, rng));
    ch = next;
  }
  reduce_ = Conv<S>::make(params_, "content.reduce", ch, cfg.content_dim / (cfg.grid * cfg.grid), 1, 1, rng, 1.0);
}

template <typename S>
Var<S> ContentNet<S>::embed(Bound<S>& b, Var<S> image) const {
  if (image.height() != input_size_ || image.width() != input_size_)
    throw DimensionMismatch("content_embed: expected " + std::to_string(input_size_) + "x" +
                            std::to_string(input_size_) + " input");
  Var<S> h = lrelu(stem_(b, image));
  for (const auto& stage : stages_) h = lrelu(stage(b, h));
  h = reduce_(b, h);
  h = ad::avg_pool(h, h.height() / grid_);
  // (C, l*l) column-major == l x l x C flattened pixel-major.
  return ad::reshape(h, 1, h.value().size());
}

// ---------------------------------------------------------------- MaskedTransformer

template <typename S>
MaskedTransformer<S>::MaskedTransformer(const NetConfig& cfg, Rng& rng)
    : style_dim_(cfg.style_dim), content_dim_(cfg.content_dim), heads_(cfg.heads) {
  const int d = cfg.token_dim();
  constexpr double kStd = 0.02;
  masked_token_ = params_.add("transformer.masked_token", ad::normal_init<S>(1, cfg.style_dim, kStd, rng));
  for (int l = 0; l < cfg.transformer_layers; ++l) {
    const std::string p = "transformer.block" + std::to_string(l);
    Block blk;
    blk.ln1 = LayerNorm<S>::make(params_, p + ".ln1", d);
    blk.q = Linear<S>::make(params_, p + ".q", d, d, rng, true, kStd);
    blk.k = Linear<S>::make(params_, p + ".k", d, d, rng, true, kStd);
    blk.v = Linear<S>::make(params_, p + ".v", d, d, rng, true, kStd);
    blk.o = Linear<S>::make(params_, p + ".o", d, d, rng, true, kStd);
    blk.ln2 = LayerNorm<S>::make(params_, p + ".ln2", d);
    blk.ff1 = Linear<S>::make(params_, p + ".ff1", d, cfg.ff_dim, rng, true, kStd);
    blk.ff2 = Linear<S>::make(params_, p + ".ff2", cfg.ff_dim, d, rng, true, kStd);
    blocks_.push_back(blk);
  }
  final_ln_ = LayerNorm<S>::make(params_, "transformer.final_ln", d);
  head_ = Linear<S>::make(params_, "transformer.head", d, cfg.style_dim, rng, true, kStd);
}

template <typename S>
Var<S> MaskedTransformer<S>::assemble(Bound<S>& b, const std::vector<Var<S>>& contents,
                                      const std::vector<Var<S>>& styles, Var<S> unseen_content) const {
  if (contents.empty()) throw InvalidInput("transformer input needs at least one preferred pair");
  if (contents.size() != styles.size()) throw DimensionMismatch("transformer input: contents/styles count differ");
  std::vector<Var<S>> rows;
  rows.reserve(contents.size() + 1);
  for (std::size_t i = 0; i < contents.size(); ++i) {
    if (contents[i].cols() != content_dim_ || styles[i].cols() != style_dim_)
      throw DimensionMismatch("transformer input: embedding width mismatch");
    rows.push_back(ad::concat_cols<S>({contents[i], styles[i]}));
  }
  if (unseen_content.cols() != content_dim_) throw DimensionMismatch("transformer input: unseen content width");
  rows.push_back(ad::concat_cols<S>({unseen_content, b[masked_token_]}));
  return ad::concat_rows(rows);
}

template <typename S>
Var<S> MaskedTransformer<S>::predict(Bound<S>& b, Var<S> tokens, AttentionTrace* trace) const {
  const long n = tokens.rows();
  const int d = style_dim_ + content_dim_;
  if (tokens.cols() != d) throw DimensionMismatch("transformer: token width mismatch");
  const int dh = d / heads_;
  const S inv_sqrt = S(1) / std::sqrt(S(dh));
  Var<S> x = tokens;
  for (const auto& blk : blocks_) {
    Var<S> h = blk.ln1(b, x);
    Var<S> q = blk.q(b, h), k = blk.k(b, h), v = blk.v(b, h);
    std::vector<Var<S>> heads;
    Eigen::MatrixXd mean_att = Eigen::MatrixXd::Zero(n, n);
    for (int hi = 0; hi < heads_; ++hi) {
      Var<S> qh = ad::slice_cols(q, hi * dh, dh), kh = ad::slice_cols(k, hi * dh, dh), vh = ad::slice_cols(v, hi * dh, dh);
      Var<S> att = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt));
      if (trace != nullptr) mean_att += att.value().template cast<double>() / heads_;
      heads.push_back(ad::matmul(att, vh));
    }
    if (trace != nullptr) trace->layers.push_back(mean_att);
    x = ad::add(x, blk.o(b, heads.size() == 1 ? heads.front() : ad::concat_cols(heads)));
    Var<S> f = blk.ff2(b, ad::gelu(blk.ff1(b, blk.ln2(b, x))));
    x = ad::add(x, f);
  }
  Var<S> last = ad::slice_rows(final_ln_(b, x), n - 1, 1);
  return head_(b, last);
}

// ---------------------------------------------------------------- Enhancer

template <typename S>
Enhancer<S>::Enhancer(const NetConfig& cfg, Rng& rng) {
  const int levels = cfg.enhancer_levels;
  auto width = [&cfg](int level) { return cfg.base_channels << level; };
  for (int i = 0; i < levels; ++i) {
    const std::string p = "enhancer.enc" + std::to_string(i);
    const int in = i == 0 ? 3 : width(i - 1);
    encoder_.push_back({Conv<S>::make(params_, p + ".a", in, width(i), 3, 1, rng),
                        Conv<S>::make(params_, p + ".b", width(i), width(i), 3, 1, rng)});
  }
  for (int i = 0; i + 1 < levels; ++i) {
    const std::string p = "enhancer.dec" + std::to_string(i);
    decoder_.push_back({Conv<S>::make(params_, p + ".a", width(i + 1) + width(i), width(i), 3, 1, rng),
                        Conv<S>::make(params_, p + ".b", width(i), width(i), 3, 1, rng)});
    inject_.push_back(Linear<S>::make(params_, "enhancer.inject" + std::to_string(i), cfg.style_dim, width(i), rng,
                                      false));
  }
  out_ = Conv<S>::make(params_, "enhancer.out", width(0), 3, 1, 1, rng, 0.1);
}

template <typename S>
Var<S> Enhancer<S>::forward(Bound<S>& b, Var<S> image, Var<S> style, bool inject_style) const {
  const int levels = this->levels();
  if (image.rows() != 3) throw DimensionMismatch("enhance: expected an RGB tensor");
  if (image.height() % (1 << (levels - 1)) != 0 || image.width() % (1 << (levels - 1)) != 0)
    throw DimensionMismatch("enhance: image size must be divisible by 2^(levels-1)");
  if (style.rows() != 1 || (!inject_.empty() && style.cols() != inject_.front().in))
    throw DimensionMismatch("enhance: style vector length mismatch");

  std::vector<Var<S>> skips;
  Var<S> h = image;
  for (int i = 0; i < levels; ++i) {
    if (i > 0) h = ad::avg_pool(h, 2);
    h = lrelu(encoder_[static_cast<std::size_t>(i)].b(b, lrelu(encoder_[static_cast<std::size_t>(i)].a(b, h))));
    skips.push_back(h);
  }
  for (int i = levels - 2; i >= 0; --i) {
    const auto& st = decoder_[static_cast<std::size_t>(i)];
    Var<S> skip = skips[static_cast<std::size_t>(i)];
    if (inject_style) skip = ad::add_channel_bias(skip, inject_[static_cast<std::size_t>(i)](b, style));
    Var<S> up = ad::upsample_nearest(h, 2);
    h = lrelu(st.b(b, lrelu(st.a(b, ad::concat_rows<S>({up, skip})))));
  }
  return ad::clamp(ad::add(image, out_(b, h)), S(0), S(1));
}

template class StyleNet<float>;
template class StyleNet<double>;
template class ContentNet<float>;
template class ContentNet<double>;
template class MaskedTransformer<float>;
template class MaskedTransformer<double>;
template class Enhancer<float>;
template class Enhancer<double>;

}  // namespace msm::nets
