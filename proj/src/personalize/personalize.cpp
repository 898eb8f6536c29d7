#include "msm/personalize/personalize.hpp"

#include "msm/errors.hpp"
#include "msm/json_io.hpp"
#include "msm/nets/checkpoint.hpp"

#include <algorithm>
#include <numeric>

namespace msm {

using ad::Bound;
using ad::Tape;
using ad::Var;

namespace {

void require_prefs(std::size_t n, const char* what) {
  if (n == 0) throw InvalidInput(std::string(what) + ": the preferred set is empty");
}

}  // namespace

PreparedPreferences prepare_preferences(const Models& m, const PreferredSet& prefs) {
  require_prefs(prefs.size(), "prepare_preferences");
  prefs.validate();
  PreparedPreferences prep;
  for (const auto& p : prefs.pairs) {
    prep.contents.push_back(content_embed(m, p.original));
    prep.styles.push_back(style_embed(m, p.original, p.retouched));
  }
  return prep;
}

StyleEmbedding masked_style(const Models& m, const PreparedPreferences& prep, const ContentEmbedding& unseen,
                            std::vector<double>* attention) {
  require_prefs(prep.size(), "personalize_masked");
  std::vector<std::pair<ContentEmbedding, StyleEmbedding>> rows;
  rows.reserve(prep.size());
  for (std::size_t i = 0; i < prep.size(); ++i) rows.emplace_back(prep.contents[i], prep.styles[i]);
  const TransformerInput input = build_input(m, rows, unseen);
  if (attention == nullptr) return predict_style(m, input);
  nets::AttentionTrace trace;
  StyleEmbedding s = predict_style(m, input, &trace);
  *attention = rollout_from_trace(trace);
  return s;
}

MaskedResult personalize_masked(const Models& m, const PreparedPreferences& prep, const Image& unseen) {
  MaskedResult r;
  r.style = masked_style(m, prep, content_embed(m, unseen), &r.attention);
  r.image = enhance(m, unseen, r.style);
  return r;
}

MaskedResult personalize_masked(const Models& m, const PreferredSet& prefs, const Image& unseen) {
  require_prefs(prefs.size(), "personalize_masked");
  return personalize_masked(m, prepare_preferences(m, prefs), unseen);
}

StyleEmbedding average_style(const PreparedPreferences& prep) {
  require_prefs(prep.size(), "personalize_average");
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(prep.styles.front().values.size());
  for (const auto& s : prep.styles) acc += s.values.cast<double>();
  return {(acc / static_cast<double>(prep.size())).cast<float>()};
}

Image personalize_average(const Models& m, const PreferredSet& prefs, const Image& unseen) {
  require_prefs(prefs.size(), "personalize_average");
  PreparedPreferences prep;
  for (const auto& p : prefs.pairs) prep.styles.push_back(style_embed(m, p.original, p.retouched));
  return enhance(m, unseen, average_style(prep));
}

std::vector<double> cosine_weights(const PreparedPreferences& prep, const ContentEmbedding& unseen) {
  require_prefs(prep.size(), "personalize_weighted");
  const Eigen::RowVectorXd u = unseen.values.cast<double>();
  std::vector<double> w(prep.size());
  double total = 0.0;
  for (std::size_t i = 0; i < prep.size(); ++i) {
    const Eigen::RowVectorXd c = prep.contents[i].values.cast<double>();
    if (c.size() != u.size()) throw DimensionMismatch("personalize_weighted: content width mismatch");
    const double denom = c.norm() * u.norm();
    w[i] = denom > 0 ? c.dot(u) / denom : 0.0;
    total += w[i];
  }
  if (total <= kWeightFloor) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
  } else {
    for (auto& v : w) v /= total;
  }
  return w;
}

StyleEmbedding weighted_style(const PreparedPreferences& prep, const ContentEmbedding& unseen) {
  const auto w = cosine_weights(prep, unseen);
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(prep.styles.front().values.size());
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * prep.styles[i].values.cast<double>();
  return {acc.cast<float>()};
}

Image personalize_weighted(const Models& m, const PreferredSet& prefs, const Image& unseen) {
  require_prefs(prefs.size(), "personalize_weighted");
  return enhance(m, unseen, weighted_style(prepare_preferences(m, prefs), content_embed(m, unseen)));
}

// ---------------------------------------------------------------- PieNet baseline

void PieNetConfig::validate() const {
  if (!(alpha > 0)) throw ConfigError("pienet.alpha", "must be positive");
  if (epochs_triplet < 0) throw ConfigError("pienet.epochs_triplet", "must be non-negative");
  if (epochs_enhancer < 0) throw ConfigError("pienet.epochs_enhancer", "must be non-negative");
  if (batch < 1) throw ConfigError("pienet.batch", "must be positive");
  if (!(lr > 0)) throw ConfigError("pienet.lr", "must be positive");
}

double triplet_term(const Eigen::RowVectorXf& anchor, const Eigen::RowVectorXf& negative,
                    const Eigen::RowVectorXf& vector, double alpha) {
  const double pos = (anchor - vector).cast<double>().squaredNorm();
  const double neg = (negative - vector).cast<double>().squaredNorm();
  return std::max(0.0, pos - neg + alpha);
}

namespace {

struct Anchor {
  std::size_t user;
  const PreferredPair* pair;
};

Var<float> triplet_var(Tape<float>& tape, Bound<float>& bs, Var<float> vectors, const nets::StyleNet<float>& net,
                       int side, const Anchor& a, const PreferredPair& negative, float alpha) {
  Var<float> v = ad::slice_rows(vectors, static_cast<long>(a.user), 1);
  Var<float> fa = net.encode(bs, tape.constant(fit_square(a.pair->retouched, side).as_tensor<float>(), side, side));
  Var<float> fn = net.encode(bs, tape.constant(fit_square(negative.retouched, side).as_tensor<float>(), side, side));
  Var<float> diff = ad::sub(ad::squared_norm(ad::sub(fa, v)), ad::squared_norm(ad::sub(fn, v)));
  Var<float> shifted = ad::add(diff, tape.constant(ad::Matrix<float>::Constant(1, 1, alpha)));
  return ad::relu(shifted);
}

}  // namespace

PieNetModels train_pienet_baseline(const Corpus& corpus, const NetConfig& net, const PieNetConfig& cfg,
                                   const LossConfig& loss) {
  cfg.validate();
  loss.validate();
  const auto users = corpus.known_users();
  if (users.size() < 2) throw InvalidInput("train_pienet_baseline: needs at least 2 users for negatives");

  PieNetModels m;
  const Models init = Models::initialize(net, StyleMode::Absolute);
  m.config = net;
  m.style = init.style;
  m.enhancer = init.enhancer;

  std::vector<Anchor> anchors;
  for (std::size_t u = 0; u < users.size(); ++u)
    for (const auto& p : users[u]->set.pairs) anchors.push_back({u, &p});
  if (anchors.empty()) throw InvalidInput("train_pienet_baseline: no pairs");

  ad::ParamSet<float> vectors;
  Rng rng(derive_seed(cfg.seed, {0}));
  vectors.add("pienet.user_vectors", ad::normal_init<float>(static_cast<long>(users.size()), net.style_dim, 0.1, rng));

  const int side = net.embed_input_size;
  const auto alpha = static_cast<float>(cfg.alpha);
  auto negative_for = [&](const Anchor& a, Rng& r) -> const PreferredPair& {
    std::uniform_int_distribution<std::size_t> pick(0, users.size() - 2);
    std::size_t other = pick(r);
    if (other >= a.user) ++other;
    const auto& pairs = users[other]->set.pairs;
    std::uniform_int_distribution<std::size_t> idx(0, pairs.size() - 1);
    return pairs[idx(r)];
  };

  // Phase 1: style encoder and preference vectors under the triplet loss.
  {
    ad::Adam<float> adam_style(static_cast<float>(cfg.lr)), adam_vec(static_cast<float>(cfg.lr));
    std::vector<std::size_t> order(anchors.size());
    std::iota(order.begin(), order.end(), 0);
    auto evaluate = [&] {
      Rng probe(derive_seed(cfg.seed, {1}));
      double total = 0.0;
      for (const auto& a : anchors) {
        Tape<float> tape;
        Bound<float> bs(tape, std::as_const(m.style.params()));
        Bound<float> bv(tape, std::as_const(vectors));
        total += triplet_var(tape, bs, bv[0], m.style, side, a, negative_for(a, probe), alpha).value()(0, 0);
      }
      return total / static_cast<double>(anchors.size());
    };
    m.triplet_losses.push_back(evaluate());
    for (int epoch = 0; epoch < cfg.epochs_triplet; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double total = 0.0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
        for (std::size_t i = start; i < end; ++i) {
          const Anchor& a = anchors[order[i]];
          Tape<float> tape;
          Bound<float> bs(tape, m.style.params());
          Bound<float> bv(tape, vectors);
          Var<float> l = triplet_var(tape, bs, bv[0], m.style, side, a, negative_for(a, rng), alpha);
          total += l.value()(0, 0);
          tape.backward(l);
        }
        const float inv = 1.0f / static_cast<float>(end - start);
        adam_style.step(m.style.params(), inv);
        adam_vec.step(vectors, inv);
      }
      m.triplet_losses.push_back(total / static_cast<double>(anchors.size()));
    }
  }
  for (std::size_t u = 0; u < users.size(); ++u) m.user_vectors.push_back({vectors[0].value.row(static_cast<long>(u))});

  // Phase 2: enhancer rendering each pair from its user's vector.
  {
    const PerceptualExtractor<float> phi(loss.perceptual_channels, loss.perceptual_seed);
    const int ns = net.enhancer_input_size;
    ad::Adam<float> adam(static_cast<float>(cfg.lr));
    std::vector<std::size_t> order(anchors.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs_enhancer; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double total = 0.0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
        for (std::size_t i = start; i < end; ++i) {
          const Anchor& a = anchors[order[i]];
          Tape<float> tape;
          Bound<float> be(tape, m.enhancer.params());
          Var<float> x = tape.constant(fit_square(a.pair->original, ns).as_tensor<float>(), ns, ns);
          Var<float> y = tape.constant(fit_square(a.pair->retouched, ns).as_tensor<float>(), ns, ns);
          Var<float> v = tape.constant(m.user_vectors[a.user].values);
          Var<float> l = loss_pienet(y, m.enhancer.forward(be, x, v), loss, phi);
          total += l.value()(0, 0);
          tape.backward(l);
        }
        adam.step(m.enhancer.params(), 1.0f / static_cast<float>(end - start));
      }
      m.enhancer_losses.push_back(total / static_cast<double>(anchors.size()));
    }
  }
  return m;
}

PreferenceVector pienet_preference(const PieNetModels& m, const PreferredSet& prefs) {
  require_prefs(prefs.size(), "personalize_pienet");
  const int side = m.config.embed_input_size;
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(m.config.style_dim);
  for (const auto& p : prefs.pairs) {
    Tape<float> tape;
    Bound<float> b(tape, m.style.params());
    acc += m.style.encode(b, tape.constant(fit_square(p.retouched, side).as_tensor<float>(), side, side))
               .value()
               .row(0)
               .cast<double>();
  }
  return {(acc / static_cast<double>(prefs.size())).cast<float>()};
}

Image personalize_pienet(const PieNetModels& m, const PreferenceVector& v, const Image& unseen) {
  return render(m.enhancer, m.config.enhancer_input_size, unseen, v.values);
}

Image personalize_pienet(const PieNetModels& m, const PreferredSet& prefs, const Image& unseen) {
  return personalize_pienet(m, pienet_preference(m, prefs), unseen);
}

void save_pienet(const PieNetModels& m, const std::filesystem::path& path) {
  Checkpoint ckpt;
  ckpt.kind = "pienet-baseline";
  ckpt.config = {{"net", m.config}};
  ckpt.meta = {{"triplet_losses", m.triplet_losses}, {"enhancer_losses", m.enhancer_losses}};
  ckpt.add(m.style.params());
  ckpt.add(m.enhancer.params());
  ad::ParamSet<float> vectors;
  ad::Matrix<float> v(static_cast<long>(m.user_vectors.size()), m.config.style_dim);
  for (std::size_t i = 0; i < m.user_vectors.size(); ++i) v.row(static_cast<long>(i)) = m.user_vectors[i].values;
  vectors.add("pienet.user_vectors", v);
  ckpt.add(vectors);
  write_checkpoint(ckpt, path);
}

PieNetModels load_pienet(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.kind != "pienet-baseline") throw DecodeError("checkpoint " + path.string() + " is not a PieNet baseline");
  PieNetModels m;
  m.config = ckpt.config.at("net").get<NetConfig>();
  const Models init = Models::initialize(m.config, StyleMode::Absolute);
  m.style = init.style;
  m.enhancer = init.enhancer;
  ckpt.restore(m.style.params());
  ckpt.restore(m.enhancer.params());
  const auto& v = ckpt.tensors.at("pienet.user_vectors");
  for (long r = 0; r < v.rows(); ++r) m.user_vectors.push_back({v.row(r)});
  m.triplet_losses = ckpt.meta.value("triplet_losses", std::vector<double>{});
  m.enhancer_losses = ckpt.meta.value("enhancer_losses", std::vector<double>{});
  return m;
}

}  // namespace msm
