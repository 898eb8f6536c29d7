#include "msm/training/training.hpp"

#include "msm/errors.hpp"
#include "msm/imaging/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace msm {

using ad::Bound;
using ad::Tape;
using ad::Var;

void LossConfig::validate() const {
  if (!(w_color >= 0)) throw ConfigError("loss.w_color", "must be non-negative");
  if (!(w_perceptual >= 0)) throw ConfigError("loss.w_perceptual", "must be non-negative");
  if (!(w_tv >= 0)) throw ConfigError("loss.w_tv", "must be non-negative");
  if (perceptual_channels < 1) throw ConfigError("loss.perceptual_channels", "must be positive");
}

void TrainConfig::validate() const {
  if (!(lr > 0)) throw ConfigError("train.lr", "must be positive");
  if (epochs_step1 < 0) throw ConfigError("train.epochs_step1", "must be non-negative");
  if (epochs_step2 < 0) throw ConfigError("train.epochs_step2", "must be non-negative");
  if (batch_step1 < 1) throw ConfigError("train.batch_step1", "must be positive");
  if (batch_step2 < 1) throw ConfigError("train.batch_step2", "must be positive");
  if (i_train < 1) throw ConfigError("train.i_train", "must be at least 1");
  if (samples_per_epoch_step2 < 0) throw ConfigError("train.samples_per_epoch_step2", "must be non-negative");
}

template <typename S>
PerceptualExtractor<S>::PerceptualExtractor(int channels, std::uint64_t seed) {
  Rng rng(seed);
  c1_ = nets::Conv<S>::make(params_, "perceptual.c1", 3, channels, 3, 1, rng);
  c2_ = nets::Conv<S>::make(params_, "perceptual.c2", channels, 2 * channels, 3, 2, rng);
}

template <typename S>
Var<S> PerceptualExtractor<S>::features(Tape<S>& tape, Var<S> image) const {
  Bound<S> b(tape, params_);
  return nets::lrelu(c2_(b, nets::lrelu(c1_(b, image))));
}

template <typename S>
Var<S> loss_pienet(Var<S> target, Var<S> pred, const LossConfig& cfg, const PerceptualExtractor<S>& phi) {
  if (target.rows() != pred.rows() || target.height() != pred.height() || target.width() != pred.width())
    throw DimensionMismatch("loss_pienet: target and prediction differ in size");
  Tape<S>& tape = *pred.tape;
  Var<S> loss = ad::scale(ad::mean_abs_diff(pred, target), S(cfg.w_color));
  if (cfg.w_perceptual > 0) {
    Var<S> fp = phi.features(tape, pred);
    Var<S> ft = phi.features(tape, target);
    loss = ad::add(loss, ad::scale(ad::mean_abs_diff(fp, ft), S(cfg.w_perceptual)));
  }
  if (cfg.w_tv > 0) loss = ad::add(loss, ad::scale(ad::total_variation(pred), S(cfg.w_tv)));
  return loss;
}

template class PerceptualExtractor<float>;
template class PerceptualExtractor<double>;
template Var<float> loss_pienet(Var<float>, Var<float>, const LossConfig&, const PerceptualExtractor<float>&);
template Var<double> loss_pienet(Var<double>, Var<double>, const LossConfig&, const PerceptualExtractor<double>&);

double loss_pienet(const Image& target, const Image& pred, const LossConfig& cfg) {
  require_same_size(target, pred, "loss_pienet");
  cfg.validate();
  const PerceptualExtractor<double> phi(cfg.perceptual_channels, cfg.perceptual_seed);
  Tape<double> tape;
  Var<double> t = tape.constant(target.as_tensor<double>(), target.height(), target.width());
  Var<double> p = tape.constant(pred.as_tensor<double>(), pred.height(), pred.width());
  return loss_pienet(t, p, cfg, phi).value()(0, 0);
}

void TrainLog::record(const EpochRecord& r) {
  epochs.push_back(r);
  if (on_epoch) on_epoch(r);
}

std::vector<double> TrainLog::losses(int step) const {
  std::vector<double> out;
  for (const auto& e : epochs)
    if (e.step == step) out.push_back(e.loss);
  return out;
}

nlohmann::json TrainLog::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : epochs) j.push_back({{"step", e.step}, {"epoch", e.epoch}, {"loss", e.loss}, {"seconds", e.seconds}});
  return j;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct PairTensors {
  ad::Matrix<float> x_embed, y_embed, x_enh, y_enh;
};

ad::Matrix<float> sized(const Image& img, int side) { return fit_square(img, side).as_tensor<float>(); }

std::vector<const PreferredPair*> known_pairs(const Corpus& corpus) {
  std::vector<const PreferredPair*> out;
  for (const auto* u : corpus.known_users())
    for (const auto& p : u->set.pairs) out.push_back(&p);
  return out;
}

Var<float> step1_loss(Tape<float>& tape, Bound<float>& bs, Bound<float>& be, const Models& m, const PairTensors& t,
                      const LossConfig& lc, const PerceptualExtractor<float>& phi) {
  const int es = m.config.embed_input_size, ns = m.config.enhancer_input_size;
  Var<float> s = m.style.embed(bs, tape.constant(t.x_embed, es, es), tape.constant(t.y_embed, es, es));
  Var<float> pred = m.enhancer.forward(be, tape.constant(t.x_enh, ns, ns), s);
  return loss_pienet(tape.constant(t.y_enh, ns, ns), pred, lc, phi);
}

}  // namespace

std::vector<double> train_step1(Models& models, const Corpus& corpus, const TrainConfig& tc, const LossConfig& lc,
                                TrainLog* log) {
  tc.validate();
  lc.validate();
  const auto pairs = known_pairs(corpus);
  if (pairs.empty()) throw InvalidInput("train_step1: corpus has no known pairs");
  const int es = models.config.embed_input_size, ns = models.config.enhancer_input_size;
  std::vector<PairTensors> data;
  data.reserve(pairs.size());
  for (const auto* p : pairs)
    data.push_back({sized(p->original, es), sized(p->retouched, es), sized(p->original, ns), sized(p->retouched, ns)});

  const PerceptualExtractor<float> phi(lc.perceptual_channels, lc.perceptual_seed);
  ad::Adam<float> adam_style(static_cast<float>(tc.lr)), adam_enh(static_cast<float>(tc.lr));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(tc.seed, {1}));

  auto evaluate = [&] {
    double total = 0.0;
    for (const auto& t : data) {
      Tape<float> tape;
      Bound<float> bs(tape, std::as_const(models.style.params()));
      Bound<float> be(tape, std::as_const(models.enhancer.params()));
      total += step1_loss(tape, bs, be, models, t, lc, phi).value()(0, 0);
    }
    return total / static_cast<double>(data.size());
  };

  std::vector<double> losses{evaluate()};
  if (log != nullptr) log->record({1, 0, losses.back(), 0.0});
  for (int epoch = 1; epoch <= tc.epochs_step1; ++epoch) {
    const auto t0 = Clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_step1)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_step1));
      for (std::size_t i = start; i < end; ++i) {
        Tape<float> tape;
        Bound<float> bs(tape, models.style.params());
        Bound<float> be(tape, models.enhancer.params());
        Var<float> loss = step1_loss(tape, bs, be, models, data[order[i]], lc, phi);
        total += loss.value()(0, 0);
        tape.backward(loss);
      }
      const float inv = 1.0f / static_cast<float>(end - start);
      adam_style.step(models.style.params(), inv);
      adam_enh.step(models.enhancer.params(), inv);
    }
    losses.push_back(total / static_cast<double>(data.size()));
    if (log != nullptr) log->record({1, epoch, losses.back(), seconds_since(t0)});
  }
  return losses;
}

namespace {

struct UserStyles {
  std::vector<ad::Matrix<float>> content_inputs;  // originals at the embedding size
  std::vector<Eigen::RowVectorXf> styles;         // frozen style targets
};

Var<float> step2_loss(Tape<float>& tape, Bound<float>& bc, Bound<float>& bt, const Models& m, const UserStyles& u,
                      const std::vector<std::size_t>& picks) {
  const int es = m.config.embed_input_size;
  std::vector<Var<float>> contents, styles;
  const std::size_t n = picks.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    contents.push_back(m.content.embed(bc, tape.constant(u.content_inputs[picks[i]], es, es)));
    styles.push_back(tape.constant(u.styles[picks[i]]));
  }
  Var<float> unseen = m.content.embed(bc, tape.constant(u.content_inputs[picks[n]], es, es));
  Var<float> tokens = m.transformer.assemble(bt, contents, styles, unseen);
  Var<float> pred = m.transformer.predict(bt, tokens);
  return ad::mean_abs_diff(pred, tape.constant(u.styles[picks[n]]));
}

}  // namespace

std::vector<double> train_step2(Models& models, const Corpus& corpus, const TrainConfig& tc, TrainLog* log) {
  tc.validate();
  const auto users = corpus.known_users();
  if (users.empty()) throw InvalidInput("train_step2: corpus has no known users");
  const std::size_t need = static_cast<std::size_t>(tc.i_train) + 1;
  const int es = models.config.embed_input_size;
  std::vector<UserStyles> data;
  std::size_t total_pairs = 0;
  for (const auto* u : users) {
    if (u->set.size() < need)
      throw InvalidInput("train_step2: " + u->set.user_label + " holds " + std::to_string(u->set.size()) +
                         " pairs, needs i_train + 1 = " + std::to_string(need));
    UserStyles us;
    for (const auto& p : u->set.pairs) {
      us.content_inputs.push_back(sized(p.original, es));
      us.styles.push_back(style_embed(models, p.original, p.retouched).values);
    }
    total_pairs += u->set.size();
    data.push_back(std::move(us));
  }

  const int per_epoch = tc.samples_per_epoch_step2 > 0 ? tc.samples_per_epoch_step2
                                                       : std::max<int>(1, static_cast<int>(total_pairs / need));
  ad::Adam<float> adam_content(static_cast<float>(tc.lr)), adam_tr(static_cast<float>(tc.lr));
  Rng rng(derive_seed(tc.seed, {2}));

  auto draw = [&](Rng& r) {
    std::uniform_int_distribution<std::size_t> pick_user(0, data.size() - 1);
    const std::size_t ui = pick_user(r);
    std::vector<std::size_t> idx(data[ui].styles.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), r);
    idx.resize(need);
    return std::make_pair(ui, idx);
  };

  // Fixed probe set so the epoch-0 loss is comparable with later epochs.
  auto evaluate = [&] {
    Rng probe(derive_seed(tc.seed, {3}));
    double total = 0.0;
    for (int s = 0; s < per_epoch; ++s) {
      const auto [ui, picks] = draw(probe);
      Tape<float> tape;
      Bound<float> bc(tape, std::as_const(models.content.params()));
      Bound<float> bt(tape, std::as_const(models.transformer.params()));
      total += step2_loss(tape, bc, bt, models, data[ui], picks).value()(0, 0);
    }
    return total / per_epoch;
  };

  std::vector<double> losses{evaluate()};
  if (log != nullptr) log->record({2, 0, losses.back(), 0.0});
  for (int epoch = 1; epoch <= tc.epochs_step2; ++epoch) {
    const auto t0 = Clock::now();
    double total = 0.0;
    for (int start = 0; start < per_epoch; start += tc.batch_step2) {
      const int end = std::min(per_epoch, start + tc.batch_step2);
      for (int s = start; s < end; ++s) {
        const auto [ui, picks] = draw(rng);
        Tape<float> tape;
        Bound<float> bc(tape, models.content.params());
        Bound<float> bt(tape, models.transformer.params());
        Var<float> loss = step2_loss(tape, bc, bt, models, data[ui], picks);
        total += loss.value()(0, 0);
        tape.backward(loss);
      }
      const float inv = 1.0f / static_cast<float>(end - start);
      adam_content.step(models.content.params(), inv);
      adam_tr.step(models.transformer.params(), inv);
    }
    losses.push_back(total / per_epoch);
    if (log != nullptr) log->record({2, epoch, losses.back(), seconds_since(t0)});
  }
  return losses;
}

double reconstruction_psnr(const Models& models, const Corpus& corpus, std::size_t max_pairs) {
  const auto pairs = known_pairs(corpus);
  const std::size_t n = max_pairs > 0 ? std::min(max_pairs, pairs.size()) : pairs.size();
  if (n == 0) throw InvalidInput("reconstruction_psnr: no pairs");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = *pairs[i * pairs.size() / n];
    total += psnr(p.retouched, enhance(models, p.original, style_embed(models, p.original, p.retouched)));
  }
  return total / static_cast<double>(n);
}

}  // namespace msm
