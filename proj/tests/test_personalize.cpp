#include "msm/errors.hpp"
#include "msm/personalize/personalize.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace msm;
using msm::test::random_image;
using msm::test::tiny_corpus;
using msm::test::tiny_net;

namespace {

Models perturbed_models(std::uint64_t seed) {
  Models m = Models::initialize(tiny_net());
  Rng rng(seed);
  std::uniform_real_distribution<float> u(-0.3f, 0.3f);
  for (auto& p : m.transformer.params())
    for (long i = 0; i < p.value.size(); ++i) p.value.data()[i] += u(rng);
  return m;
}

PreferredSet random_prefs(Rng& rng, int n, int side = 8) {
  PreferredSet s;
  s.user_label = "test";
  for (int i = 0; i < n; ++i) s.pairs.push_back({random_image(rng, side, side), random_image(rng, side, side), i % 3});
  return s;
}

float max_abs_diff(const Image& a, const Image& b) { return (a.pixels() - b.pixels()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Masked, ContractAttentionAndOrderInvariance) {
  Rng rng(1);
  const Models m = perturbed_models(2);
  for (int n : {1, 4, 9}) {
    PreferredSet prefs = random_prefs(rng, n);
    const Image unseen = random_image(rng, 12, 20);
    const MaskedResult r = personalize_masked(m, prefs, unseen);
    EXPECT_EQ(r.image.height(), 12);
    EXPECT_EQ(r.image.width(), 20);
    ASSERT_EQ(static_cast<int>(r.attention.size()), n);
    EXPECT_NEAR(std::accumulate(r.attention.begin(), r.attention.end(), 0.0), 1.0, 1e-6);
    EXPECT_EQ(r.style.values.size(), m.config.style_dim);

    std::reverse(prefs.pairs.begin(), prefs.pairs.end());
    const MaskedResult s = personalize_masked(m, prefs, unseen);
    EXPECT_LE(max_abs_diff(r.image, s.image), 1e-4f);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(r.attention[i], s.attention[n - 1 - i], 1e-5);
  }
  EXPECT_THROW(personalize_masked(m, PreferredSet{}, random_image(rng, 8, 8)), InvalidInput);
}

TEST(Masked, PreparedAndDirectPathsAgree) {
  Rng rng(3);
  const Models m = perturbed_models(4);
  const PreferredSet prefs = random_prefs(rng, 3);
  const Image unseen = random_image(rng, 8, 8);
  const MaskedResult a = personalize_masked(m, prefs, unseen);
  const MaskedResult b = personalize_masked(m, prepare_preferences(m, prefs), unseen);
  EXPECT_TRUE(a.image == b.image);
  EXPECT_TRUE(a.style.values == b.style.values);
}

TEST(Average, SinglePairIsThatPairsStyle) {
  Rng rng(5);
  const Models m = Models::initialize(tiny_net());
  const PreferredSet prefs = random_prefs(rng, 1);
  const Image unseen = random_image(rng, 8, 8);
  const Image expected = enhance(m, unseen, style_embed(m, prefs.pairs[0].original, prefs.pairs[0].retouched));
  EXPECT_TRUE(personalize_average(m, prefs, unseen) == expected);
}

TEST(Average, IndependentOfUnseenAndOfDuplication) {
  Rng rng(6);
  const Models m = Models::initialize(tiny_net());
  PreferredSet prefs = random_prefs(rng, 4);
  const PreparedPreferences prep = prepare_preferences(m, prefs);
  const StyleEmbedding s = average_style(prep);
  const Image u1 = random_image(rng, 8, 8), u2 = random_image(rng, 8, 8);
  EXPECT_TRUE(personalize_average(m, prefs, u1) == enhance(m, u1, s));
  EXPECT_TRUE(personalize_average(m, prefs, u2) == enhance(m, u2, s));

  PreferredSet doubled = prefs;
  doubled.pairs.insert(doubled.pairs.end(), prefs.pairs.begin(), prefs.pairs.end());
  EXPECT_LE((average_style(prepare_preferences(m, doubled)).values - s.values).cwiseAbs().maxCoeff(), 1e-6f);
  EXPECT_LE(max_abs_diff(personalize_average(m, doubled, u1), personalize_average(m, prefs, u1)), 1e-5f);
  EXPECT_THROW(personalize_average(m, PreferredSet{}, u1), InvalidInput);
}

TEST(Weighted, SinglePairIsExactlyThatStyle) {
  Rng rng(7);
  const Models m = Models::initialize(tiny_net());
  const PreferredSet prefs = random_prefs(rng, 1);
  const Image unseen = random_image(rng, 8, 8);
  const PreparedPreferences prep = prepare_preferences(m, prefs);
  EXPECT_EQ(cosine_weights(prep, content_embed(m, unseen)), std::vector<double>{1.0});
  EXPECT_TRUE(personalize_weighted(m, prefs, unseen) == enhance(m, unseen, prep.styles[0]));
}

TEST(Weighted, IdenticalContentsGiveArithmeticMean) {
  PreparedPreferences prep;
  Eigen::RowVectorXf c(4);
  c << 1, 2, 3, 4;
  for (int i = 0; i < 3; ++i) {
    prep.contents.push_back({c});
    prep.styles.push_back({Eigen::RowVectorXf::Constant(2, static_cast<float>(i))});
  }
  Eigen::RowVectorXf u(4);
  u << 0.5f, -1, 2, 0;
  const StyleEmbedding s = weighted_style(prep, {u});
  EXPECT_NEAR(s.values(0), 1.0f, 1e-6);
  EXPECT_NEAR(s.values(1), 1.0f, 1e-6);
}

TEST(Weighted, FallsBackToUniformWhenWeightsCancel) {
  PreparedPreferences prep;
  Eigen::RowVectorXf c(3);
  c << 1, 0, 0;
  prep.contents = {{c}, {-c}};
  prep.styles = {{Eigen::RowVectorXf::Constant(2, 2.0f)}, {Eigen::RowVectorXf::Constant(2, 4.0f)}};
  const auto w = cosine_weights(prep, {c});
  EXPECT_EQ(w, (std::vector<double>{0.5, 0.5}));
  EXPECT_NEAR(weighted_style(prep, {c}).values(0), 3.0f, 1e-6);
  // Weights follow content similarity otherwise.
  Eigen::RowVectorXf d(3);
  d << 0, 1, 0;
  prep.contents = {{c}, {d}};
  Eigen::RowVectorXf q(3);
  q << 3, 1, 0;
  const auto w2 = cosine_weights(prep, {q});
  EXPECT_GT(w2[0], w2[1]);
  EXPECT_NEAR(w2[0] + w2[1], 1.0, 1e-12);
}

TEST(PieNet, TripletTermFloorAndMargin) {
  Eigen::RowVectorXf v = Eigen::RowVectorXf::Zero(3), a(3), n(3);
  a << 0.1f, 0, 0;
  n << 1, 0, 0;
  EXPECT_EQ(triplet_term(v, n, v, 0.0), 0.0);
  EXPECT_GE(triplet_term(n, a, v, 0.0), 0.0);
  EXPECT_NEAR(triplet_term(a, n, v, 0.0), 0.0, 1e-12);        // rectified: 0.01 - 1 < 0
  EXPECT_NEAR(triplet_term(a, a, v, 0.2), 0.2, 1e-7);         // equal distances leave the margin
  EXPECT_NEAR(triplet_term(n, a, v, 0.2), 1.0 - 0.01 + 0.2, 1e-6);
}

TEST(PieNet, TrainsClustersAndRoundTrips) {
  CorpusConfig cc = tiny_corpus();
  cc.n_users = 4;
  cc.images_per_user = 12;
  const Corpus corpus = build_corpus(cc);
  PieNetConfig pc;
  pc.lr = 2e-3;
  pc.epochs_triplet = 15;
  pc.epochs_enhancer = 2;
  pc.batch = 8;
  const PieNetModels m = train_pienet_baseline(corpus, tiny_net(), pc, LossConfig{});
  ASSERT_EQ(m.user_vectors.size(), 4u);
  EXPECT_EQ(m.triplet_losses.size(), 16u);  // initial evaluation + one per epoch
  EXPECT_EQ(m.enhancer_losses.size(), 2u);
  EXPECT_LT(m.triplet_losses.back(), m.triplet_losses.front());
  EXPECT_LT(m.triplet_losses.back(), pc.alpha);

  // Retouched embeddings sit closer to their own user's vector than to the others.
  double intra = 0.0, inter = 0.0;
  int n_intra = 0, n_inter = 0;
  const auto users = corpus.known_users();
  for (std::size_t u = 0; u < users.size(); ++u) {
    PreferredSet one;
    for (const auto& p : users[u]->set.pairs) {
      one.pairs = {p};
      const Eigen::RowVectorXf f = pienet_preference(m, one).values;
      for (std::size_t v = 0; v < users.size(); ++v) {
        const double d = (f - m.user_vectors[v].values).norm();
        (u == v ? intra : inter) += d;
        ++(u == v ? n_intra : n_inter);
      }
    }
  }
  EXPECT_LT(intra / n_intra, inter / n_inter);

  Rng rng(8);
  const PreferredSet prefs = random_prefs(rng, 3);
  const Image unseen = random_image(rng, 16, 16);
  const Image out = personalize_pienet(m, prefs, unseen);
  EXPECT_EQ(out.height(), 16);
  msm::test::TempDir dir("pienet");
  save_pienet(m, dir.path() / "p.msm");
  const PieNetModels back = load_pienet(dir.path() / "p.msm");
  EXPECT_TRUE(personalize_pienet(back, prefs, unseen) == out);
  EXPECT_TRUE(back.user_vectors[2].values == m.user_vectors[2].values);
  EXPECT_EQ(back.triplet_losses, m.triplet_losses);
}

TEST(PieNet, PreferenceIsMeanOfRetouchedEmbeddings) {
  CorpusConfig cc = tiny_corpus();
  const Corpus corpus = build_corpus(cc);
  PieNetConfig pc;
  pc.epochs_triplet = 0;
  pc.epochs_enhancer = 0;
  const PieNetModels m = train_pienet_baseline(corpus, tiny_net(), pc, LossConfig{});
  Rng rng(9);
  const PreferredSet prefs = random_prefs(rng, 3);
  Eigen::RowVectorXf mean = Eigen::RowVectorXf::Zero(m.config.style_dim);
  for (const auto& p : prefs.pairs) {
    PreferredSet one;
    one.pairs = {p};
    mean += pienet_preference(m, one).values / 3.0f;
  }
  EXPECT_LE((pienet_preference(m, prefs).values - mean).cwiseAbs().maxCoeff(), 1e-5f);
  // Originals do not enter the absolute embedding.
  PreferredSet swapped = prefs;
  for (auto& p : swapped.pairs) p.original = random_image(rng, 8, 8);
  EXPECT_TRUE(pienet_preference(m, swapped).values == pienet_preference(m, prefs).values);
}

TEST(PieNet, NeedsTwoUsersAndPositiveMargin) {
  CorpusConfig cc = tiny_corpus();
  Corpus corpus = build_corpus(cc);
  Corpus single = corpus;
  single.users.erase(single.users.begin() + 1, single.users.end());
  single.users[0].held_out = false;
  EXPECT_THROW(train_pienet_baseline(single, tiny_net(), PieNetConfig{}, LossConfig{}), InvalidInput);
  PieNetConfig bad;
  bad.alpha = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}
