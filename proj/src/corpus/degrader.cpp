#include "msm/corpus/degrader.hpp"

#include "msm/errors.hpp"
#include "msm/nets/checkpoint.hpp"

#include <algorithm>
#include <numeric>

namespace msm {

void DegraderConfig::validate() const {
  if (width < 1) throw ConfigError("degrader.width", "must be positive");
  if (epochs < 1) throw ConfigError("degrader.epochs", "must be positive");
  if (batch < 1) throw ConfigError("degrader.batch", "must be positive");
  if (!(lr > 0.0)) throw ConfigError("degrader.lr", "must be positive");
}

namespace nets {

template <typename S>
DegraderNet<S>::DegraderNet(int width, Rng& rng) {
  c1_ = Conv<S>::make(params_, "degrader.c1", 3, width, 3, 1, rng);
  c2_ = Conv<S>::make(params_, "degrader.c2", width, width, 3, 1, rng);
  context_ = Linear<S>::make(params_, "degrader.context", width, width, rng);
  gain_ = Linear<S>::make(params_, "degrader.gain", width, width, rng, true, 0.01);
  shift_ = Linear<S>::make(params_, "degrader.shift", width, width, rng, true, 0.01);
  c3_ = Conv<S>::make(params_, "degrader.c3", width, width, 3, 1, rng);
  c4_ = Conv<S>::make(params_, "degrader.c4", width, 3, 3, 1, rng, 0.1);
}

template <typename S>
Var<S> DegraderNet<S>::forward(Bound<S>& b, Var<S> image) const {
  Var<S> h1 = lrelu(c1_(b, image));
  Var<S> h2 = lrelu(c2_(b, h1));
  Var<S> ctx = lrelu(context_(b, ad::global_avg_pool(h2)));
  Var<S> gain = ad::add(gain_(b, ctx), b.tape().constant(ad::Matrix<S>::Ones(1, gain_.out)));
  h2 = ad::add_channel_bias(ad::scale_channels(h2, gain), shift_(b, ctx));
  Var<S> h3 = lrelu(c3_(b, h2));
  return ad::clamp(ad::add(image, c4_(b, h3)), S(0), S(1));
}

template class DegraderNet<float>;
template class DegraderNet<double>;

}  // namespace nets

using ad::Var;

namespace {

Var<float> tensor_of(ad::Tape<float>& tape, const Image& img) {
  return tape.constant(img.as_tensor<float>(), img.height(), img.width());
}

}  // namespace

DegradeModel train_degrader(const std::vector<DegraderPair>& pairs, const DegraderConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) throw InvalidInput("train_degrader: no training pairs");
  const Image& first = pairs.front().first;
  if (first.height() != first.width()) throw InvalidInput("train_degrader: images must be square");
  for (const auto& [enhanced, original] : pairs) {
    require_same_size(enhanced, original, "train_degrader");
    require_same_size(enhanced, first, "train_degrader");
  }

  DegradeModel model;
  model.training_config = cfg;
  model.image_size = first.height();
  Rng rng(derive_seed(cfg.seed, {0}));
  model.net = nets::DegraderNet<float>(cfg.width, rng);
  ad::Adam<float> adam(static_cast<float>(cfg.lr));

  model.epoch_losses.push_back(degrader_mae(model, pairs));
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(derive_seed(cfg.seed, {1}));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      for (std::size_t i = start; i < end; ++i) {
        const auto& [enhanced, original] = pairs[order[i]];
        ad::Tape<float> tape;
        ad::Bound<float> b(tape, model.net.params());
        Var<float> loss = ad::mean_abs_diff(model.net.forward(b, tensor_of(tape, enhanced)), tensor_of(tape, original));
        total += loss.value()(0, 0);
        tape.backward(loss);
      }
      adam.step(model.net.params(), 1.0f / static_cast<float>(end - start));
    }
    model.epoch_losses.push_back(total / static_cast<double>(pairs.size()));
  }
  return model;
}

Image degrade(const DegradeModel& model, const Image& retouched) {
  if (retouched.height() != model.image_size || retouched.width() != model.image_size)
    throw DimensionMismatch("degrade: expected " + std::to_string(model.image_size) + "px square input, got " +
                            std::to_string(retouched.height()) + "x" + std::to_string(retouched.width()));
  ad::Tape<float> tape;
  ad::Bound<float> b(tape, model.net.params());
  Var<float> out = model.net.forward(b, tensor_of(tape, retouched));
  Image result(retouched.height(), retouched.width(), out.value());
  return result.clamp01();
}

double degrader_mae(const DegradeModel& model, const std::vector<DegraderPair>& pairs) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [enhanced, original] : pairs)
    total += (degrade(model, enhanced).pixels() - original.pixels()).cwiseAbs().mean();
  return total / static_cast<double>(pairs.size());
}

std::vector<DegraderPair> make_degrader_pairs(const CorpusConfig& cfg, int n_originals, int split) {
  std::vector<DegraderPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n_originals * cfg.degrader_draws));
  constexpr std::uint64_t kStream = 0xde6;
  for (int i = 0; i < n_originals; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    const int cls = i % cfg.n_content_classes;
    const Image original = synth_scene(cls, derive_seed(cfg.seed, {kStream, static_cast<std::uint64_t>(split), idx}),
                                       cfg.image_size);
    Rng rng(derive_seed(cfg.seed, {kStream + 1, static_cast<std::uint64_t>(split), idx}));
    for (int k = 0; k < cfg.degrader_draws; ++k)
      pairs.emplace_back(apply_retouch(original, sample_retouch(rng)).quantized(), original);
  }
  return pairs;
}

void apply_pseudo_originals(Corpus& corpus, const DegradeModel& model) {
  for (auto& rec : corpus.users) {
    if (rec.held_out) continue;
    for (auto& pair : rec.set.pairs) pair.original = degrade(model, pair.retouched).quantized();
    rec.pseudo_originals = true;
  }
}

void save_degrader(const DegradeModel& model, const std::filesystem::path& path) {
  Checkpoint ckpt;
  ckpt.kind = "degrader";
  const auto& c = model.training_config;
  ckpt.config = {{"width", c.width}, {"epochs", c.epochs}, {"batch", c.batch}, {"lr", c.lr}, {"seed", c.seed},
                 {"image_size", model.image_size}};
  ckpt.meta = {{"epoch_losses", model.epoch_losses}};
  ckpt.add(model.net.params());
  write_checkpoint(ckpt, path);
}

DegradeModel load_degrader(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.kind != "degrader") throw DecodeError("checkpoint " + path.string() + " is not a degrader");
  DegradeModel model;
  auto& c = model.training_config;
  c.width = ckpt.config.at("width");
  c.epochs = ckpt.config.at("epochs");
  c.batch = ckpt.config.at("batch");
  c.lr = ckpt.config.at("lr");
  c.seed = ckpt.config.at("seed");
  model.image_size = ckpt.config.at("image_size");
  model.epoch_losses = ckpt.meta.value("epoch_losses", std::vector<double>{});
  Rng rng(derive_seed(c.seed, {0}));
  model.net = nets::DegraderNet<float>(c.width, rng);
  ckpt.restore(model.net.params());
  return model;
}

}  // namespace msm
