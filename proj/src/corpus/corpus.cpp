#include "msm/corpus/corpus.hpp"

#include "msm/errors.hpp"

#include <algorithm>
#include <cmath>

namespace msm {

namespace {

// Operator-family ranges at spread 1. Multiplicative parameters vary in log space.
struct Latent {
  double ev, log_gamma, log_contrast, log_saturation, temperature;
};

constexpr Latent kRange{0.6, 0.35, 0.45, 0.5, 0.12};
constexpr double kKnotProbability = 0.25;

Latent draw_latent(Rng& rng, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  return {u(rng) * kRange.ev, u(rng) * kRange.log_gamma, u(rng) * kRange.log_contrast,
          u(rng) * kRange.log_saturation, u(rng) * kRange.temperature};
}

RetouchParams to_params(const Latent& z, Rng& rng) {
  RetouchParams p;
  p.exposure_ev = z.ev;
  p.gamma = std::exp(z.log_gamma);
  p.contrast = std::exp(z.log_contrast);
  p.saturation = std::exp(z.log_saturation);
  p.temperature_shift = std::clamp(z.temperature, -0.3, 0.3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < kKnotProbability) {
    std::uniform_real_distribution<double> d(-0.06, 0.06);
    p.tone_curve_knots = {{0.3, 0.3 + d(rng)}, {0.7, 0.7 + d(rng)}};
  }
  return p;
}

bool spreads_evenly(int index, double fraction) {
  return std::floor((index + 1) * fraction) > std::floor(index * fraction);
}

}  // namespace

void PreferredSet::validate() const {
  for (const auto& p : pairs) {
    if (!p.original.same_size(p.retouched))
      throw DimensionMismatch("preferred set '" + user_label + "': original and retouched differ in size");
    if (!p.original.same_size(pairs.front().original))
      throw DimensionMismatch("preferred set '" + user_label + "': pairs differ in size");
  }
}

const RetouchParams& PseudoUser::params_for(int content_class) const {
  if (style_table.empty()) throw InvalidInput("pseudo-user has no styles");
  if (!content_aware) return style_table.begin()->second;
  auto it = style_table.find(content_class);
  if (it == style_table.end()) throw InvalidInput("pseudo-user has no style for class " + std::to_string(content_class));
  return it->second;
}

void CorpusConfig::validate() const {
  if (n_users < 2) throw ConfigError("corpus.n_users", "must be at least 2");
  if (images_per_user < 2) throw ConfigError("corpus.images_per_user", "must be at least 2");
  if (n_test_users < 0) throw ConfigError("corpus.n_test_users", "must be non-negative");
  if (n_test_users > 0 && test_images_per_user < 2)
    throw ConfigError("corpus.test_images_per_user", "must be at least 2");
  if (image_size < Image::kMinSide) throw ConfigError("corpus.image_size", "must be at least 8");
  if (n_content_classes < 2) throw ConfigError("corpus.n_content_classes", "must be at least 2");
  if (!(content_aware_fraction >= 0.0 && content_aware_fraction <= 1.0))
    throw ConfigError("corpus.content_aware_fraction", "must lie in [0, 1]");
  if (degrader_originals < 1) throw ConfigError("corpus.degrader_originals", "must be at least 1");
  if (degrader_draws < 1) throw ConfigError("corpus.degrader_draws", "must be at least 1");
}

RetouchParams sample_retouch(Rng& rng, double spread) {
  return to_params(draw_latent(rng, spread), rng);
}

PseudoUser make_pseudo_user(int user_id, bool content_aware, int n_classes, std::uint64_t seed) {
  if (n_classes < 1) throw InvalidInput("make_pseudo_user: n_classes must be positive");
  Rng rng(seed);
  PseudoUser user;
  user.user_id = user_id;
  user.content_aware = content_aware;
  if (!content_aware) {
    user.style_table[0] = to_params(draw_latent(rng, 1.0), rng);
    return user;
  }
  // Class styles share a user-level component and differ by a full-range offset.
  const Latent base = draw_latent(rng, 0.5);
  for (int c = 0; c < n_classes; ++c) {
    const Latent off = draw_latent(rng, 1.0);
    const Latent z{base.ev + off.ev, base.log_gamma + off.log_gamma, base.log_contrast + off.log_contrast,
                   base.log_saturation + off.log_saturation, base.temperature + off.temperature};
    user.style_table[c] = to_params(z, rng);
  }
  return user;
}

std::vector<const UserRecord*> Corpus::known_users() const {
  std::vector<const UserRecord*> out;
  for (const auto& u : users)
    if (!u.held_out) out.push_back(&u);
  return out;
}

std::vector<const UserRecord*> Corpus::held_out_users() const {
  std::vector<const UserRecord*> out;
  for (const auto& u : users)
    if (u.held_out) out.push_back(&u);
  return out;
}

std::size_t Corpus::pair_count() const {
  std::size_t n = 0;
  for (const auto& u : users) n += u.set.size();
  return n;
}

Corpus build_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.config = cfg;
  const int total = cfg.n_users + cfg.n_test_users;
  corpus.users.resize(static_cast<std::size_t>(total));
  for (int u = 0; u < total; ++u) {
    UserRecord& rec = corpus.users[static_cast<std::size_t>(u)];
    rec.held_out = u >= cfg.n_users;
    const bool aware = rec.held_out || spreads_evenly(u, cfg.content_aware_fraction);
    const auto uid = static_cast<std::uint64_t>(u);
    rec.user = make_pseudo_user(u, aware, cfg.n_content_classes, derive_seed(cfg.seed, {uid, 0}));
    rec.set.user_label = "user" + std::to_string(u);

    const int n = rec.held_out ? cfg.test_images_per_user : cfg.images_per_user;
    std::vector<int> classes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) classes[static_cast<std::size_t>(i)] = i % cfg.n_content_classes;
    Rng order(derive_seed(cfg.seed, {uid, 1}));
    std::shuffle(classes.begin(), classes.end(), order);

    rec.set.pairs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int cls = classes[static_cast<std::size_t>(i)];
      PreferredPair pair;
      pair.content_class = cls;
      pair.original = synth_scene(cls, derive_seed(cfg.seed, {uid, 2, static_cast<std::uint64_t>(i)}), cfg.image_size);
      pair.retouched = apply_retouch(pair.original, rec.user.params_for(cls)).quantized();
      rec.set.pairs.push_back(std::move(pair));
    }
  }
  return corpus;
}

}  // namespace msm
