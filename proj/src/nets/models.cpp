#include "msm/nets/models.hpp"

#include "msm/errors.hpp"
#include "msm/json_io.hpp"
#include "msm/nets/checkpoint.hpp"

#include <numeric>

namespace msm {

using ad::Bound;
using ad::Tape;
using ad::Var;

namespace {

Var<float> image_var(Tape<float>& tape, const Image& img, int side) {
  const Image sized = img.height() == side && img.width() == side ? img : fit_square(img, side);
  return tape.constant(sized.as_tensor<float>(), side, side);
}

Var<float> row_var(Tape<float>& tape, const Eigen::RowVectorXf& v) { return tape.constant(v); }

}  // namespace

Models Models::initialize(const NetConfig& config, StyleMode mode) {
  config.validate();
  Models m;
  m.config = config;
  m.style_mode = mode;
  Rng rng(derive_seed(config.seed, {1}));
  m.style = nets::StyleNet<float>(config, mode, rng);
  rng.seed(derive_seed(config.seed, {2}));
  m.content = nets::ContentNet<float>(config, rng);
  rng.seed(derive_seed(config.seed, {3}));
  m.transformer = nets::MaskedTransformer<float>(config, rng);
  rng.seed(derive_seed(config.seed, {4}));
  m.enhancer = nets::Enhancer<float>(config, rng);
  return m;
}

StyleEmbedding style_embed(const Models& m, const Image& original, const Image& retouched) {
  require_same_size(original, retouched, "style_embed");
  Tape<float> tape;
  Bound<float> b(tape, m.style.params());
  const int side = m.config.embed_input_size;
  Var<float> s = m.style.embed(b, image_var(tape, original, side), image_var(tape, retouched, side));
  return {s.value().row(0)};
}

StyleEmbedding style_encode(const Models& m, const Image& image) {
  Tape<float> tape;
  Bound<float> b(tape, m.style.params());
  Var<float> s = m.style.encode(b, image_var(tape, image, m.config.embed_input_size));
  return {s.value().row(0)};
}

ContentEmbedding content_embed(const Models& m, const Image& image) {
  Tape<float> tape;
  Bound<float> b(tape, m.content.params());
  Var<float> c = m.content.embed(b, image_var(tape, image, m.config.embed_input_size));
  return {c.value().row(0)};
}

TransformerInput build_input(const Models& m, const std::vector<std::pair<ContentEmbedding, StyleEmbedding>>& pairs,
                             const ContentEmbedding& unseen) {
  if (pairs.empty()) throw InvalidInput("build_input: at least one preferred pair is required");
  const int dc = m.config.content_dim, ds = m.config.style_dim;
  TransformerInput in;
  in.content_dim = dc;
  in.style_dim = ds;
  in.rows.resize(static_cast<long>(pairs.size()) + 1, dc + ds);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [c, s] = pairs[i];
    if (c.values.size() != dc || s.values.size() != ds) throw DimensionMismatch("build_input: embedding width");
    in.rows.row(static_cast<long>(i)) << c.values, s.values;
  }
  if (unseen.values.size() != dc) throw DimensionMismatch("build_input: unseen content width");
  const auto& token = m.transformer.params()[m.transformer.masked_token_index()].value;
  in.rows.row(static_cast<long>(pairs.size())) << unseen.values, token.row(0);
  return in;
}

StyleEmbedding predict_style(const Models& m, const TransformerInput& input, nets::AttentionTrace* trace) {
  if (input.rows.rows() < 2) throw InvalidInput("predict_style: needs at least one preferred row");
  Tape<float> tape;
  Bound<float> b(tape, m.transformer.params());
  Var<float> out = m.transformer.predict(b, tape.constant(input.rows), trace);
  return {out.value().row(0)};
}

Image render(const nets::Enhancer<float>& net, int side, const Image& x, const Eigen::RowVectorXf& style,
             bool inject_style) {
  Tape<float> tape;
  Bound<float> b(tape, net.params());
  Var<float> y = net.forward(b, image_var(tape, x, side), row_var(tape, style), inject_style);
  Image out(side, side, y.value());
  return x.height() == side && x.width() == side ? out : resize(out, x.height(), x.width());
}

Image enhance(const Models& m, const Image& x, const StyleEmbedding& s, bool inject_style) {
  if (s.values.size() != m.config.style_dim) throw DimensionMismatch("enhance: style length mismatch");
  return render(m.enhancer, m.config.enhancer_input_size, x, s.values, inject_style);
}

std::vector<double> rollout_from_trace(const nets::AttentionTrace& trace) {
  if (trace.layers.empty()) throw InvalidInput("attention rollout: no layers");
  const long n = trace.layers.front().rows();
  Eigen::MatrixXd rollout = Eigen::MatrixXd::Identity(n, n);
  for (const auto& att : trace.layers) {
    Eigen::MatrixXd aug = att + Eigen::MatrixXd::Identity(n, n);
    for (long r = 0; r < n; ++r) aug.row(r) /= aug.row(r).sum();
    rollout = aug * rollout;
  }
  const Eigen::RowVectorXd masked = rollout.row(n - 1).head(n - 1);
  const double total = masked.sum();
  std::vector<double> w(static_cast<std::size_t>(n - 1));
  for (long i = 0; i + 1 < n; ++i)
    w[static_cast<std::size_t>(i)] = total > 0 ? masked(i) / total : 1.0 / static_cast<double>(n - 1);
  return w;
}

std::vector<double> attention_rollout(const Models& m, const TransformerInput& input) {
  nets::AttentionTrace trace;
  predict_style(m, input, &trace);
  return rollout_from_trace(trace);
}

void save_models(const Models& m, const std::filesystem::path& path, const std::string& extra_json) {
  Checkpoint ckpt;
  ckpt.kind = "personalization-models";
  ckpt.config = {{"net", m.config}, {"style_mode", to_string(m.style_mode)}};
  ckpt.meta = nlohmann::json::parse(extra_json);
  ckpt.add(m.style.params());
  ckpt.add(m.content.params());
  ckpt.add(m.transformer.params());
  ckpt.add(m.enhancer.params());
  write_checkpoint(ckpt, path);
}

Models load_models(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.kind != "personalization-models")
    throw DecodeError("checkpoint " + path.string() + " holds '" + ckpt.kind + "', not personalization models");
  const NetConfig cfg = ckpt.config.at("net").get<NetConfig>();
  const std::string mode = ckpt.config.at("style_mode").get<std::string>();
  Models m = Models::initialize(cfg, style_mode_from_string(mode.c_str()));
  ckpt.restore(m.style.params());
  ckpt.restore(m.content.params());
  ckpt.restore(m.transformer.params());
  ckpt.restore(m.enhancer.params());
  return m;
}

}  // namespace msm
