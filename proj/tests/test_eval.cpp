#include "msm/errors.hpp"
#include "msm/eval/benchmark.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace msm;
using msm::test::tiny_corpus;
using msm::test::tiny_net;

namespace {

const Corpus& corpus() {
  static const Corpus c = build_corpus(tiny_corpus());
  return c;
}

const Models& models() {
  static const Models m = Models::initialize(tiny_net());
  return m;
}

BenchmarkConfig small_bench() {
  BenchmarkConfig b;
  b.i_new_values = {1, 3, 8};
  b.n_samplings = 3;
  b.category_i_new = 4;
  return b;
}

}  // namespace

TEST(Benchmark, SameSeedSameReport) {
  const BenchmarkConfig b = small_bench();
  const auto a = run_benchmark(models(), corpus(), b).to_json();
  const auto c = run_benchmark(models(), corpus(), b).to_json();
  EXPECT_EQ(a, c);
  BenchmarkConfig other = b;
  other.seed = b.seed + 1;
  EXPECT_NE(run_benchmark(models(), corpus(), other).to_json()["cells"], a["cells"]);
}

TEST(Benchmark, CellsCountsAndSpread) {
  BenchmarkConfig b = small_bench();
  const auto report = run_benchmark(models(), corpus(), b);
  const long users = static_cast<long>(corpus().held_out_users().size());
  const long per_user = corpus().config.test_images_per_user;
  ASSERT_EQ(report.cells.size(), b.i_new_values.size() * b.methods.size());
  for (int i_new : b.i_new_values)
    for (const auto& m : b.methods) {
      const BenchmarkCell& c = report.cell(m, i_new);
      EXPECT_EQ(c.samplings, 3);
      EXPECT_EQ(c.unseen_images, 3 * users * (per_user - i_new));
      EXPECT_GE(c.psnr.std, 0.0);
      EXPECT_GT(c.ssim.mean, -1.0);
      EXPECT_LE(c.ssim.mean, 1.0);
      EXPECT_GE(c.delta_e.mean, 0.0);
    }
  EXPECT_THROW(report.cell("masked", 2), InvalidInput);

  b.n_samplings = 1;
  for (const auto& c : run_benchmark(models(), corpus(), b).cells) {
    EXPECT_EQ(c.psnr.std, 0.0);
    EXPECT_EQ(c.ssim.std, 0.0);
    EXPECT_EQ(c.delta_e.std, 0.0);
  }
}

TEST(Benchmark, AverageAndWeightedCoincideForOnePair) {
  BenchmarkConfig b = small_bench();
  b.i_new_values = {1};
  b.category_split = false;
  const auto r = run_benchmark(models(), corpus(), b);
  EXPECT_EQ(r.cell("average", 1).psnr.mean, r.cell("weighted", 1).psnr.mean);
  EXPECT_EQ(r.cell("average", 1).delta_e.mean, r.cell("weighted", 1).delta_e.mean);
}

TEST(Benchmark, SummarizeIsPopulationStd) {
  const Stat s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
  EXPECT_EQ(summarize({7.0}).std, 0.0);
}

TEST(Benchmark, CategorySplitAndAttention) {
  const BenchmarkConfig b = small_bench();
  const auto report = run_benchmark(models(), corpus(), b);
  ASSERT_TRUE(report.category.has_value());
  ASSERT_TRUE(report.attention.has_value());
  const int nc = corpus().config.n_content_classes;
  const CategorySplit& cs = *report.category;
  ASSERT_EQ(static_cast<int>(cs.matrix.size()), nc);
  for (int e = 0; e < nc; ++e) {
    ASSERT_EQ(static_cast<int>(cs.matrix[e].size()), nc);
    // Every image of the excluded class is unseen in every sampling.
    long excluded_images = 0;
    for (const auto* u : corpus().held_out_users())
      for (const auto& p : u->set.pairs) excluded_images += p.content_class == e ? 1 : 0;
    EXPECT_EQ(cs.counts[e][e], excluded_images * b.n_samplings);
  }
  const AttentionStats& at = *report.attention;
  EXPECT_GE(at.same_class_mass, 0.0);
  EXPECT_LE(at.same_class_mass, 1.0);
  EXPECT_GT(at.uniform_share, 0.0);
  EXPECT_LE(at.uniform_share, 1.0);
  EXPECT_GT(at.unseen_images, 0);
}

TEST(Benchmark, RejectsImpossibleRequests) {
  BenchmarkConfig b = small_bench();
  b.i_new_values = {corpus().config.test_images_per_user};
  EXPECT_THROW(run_benchmark(models(), corpus(), b), InvalidInput);
  b = small_bench();
  b.methods = {"masked", "pienet"};
  EXPECT_THROW(run_benchmark(models(), corpus(), b), MissingArtifact);
  b.methods = {"nearest"};
  EXPECT_THROW(b.validate(), ConfigError);
  b = small_bench();
  b.n_samplings = 0;
  EXPECT_THROW(b.validate(), ConfigError);
}

TEST(Benchmark, ReportSerializes) {
  const auto report = run_benchmark(models(), corpus(), small_bench());
  const auto j = report.to_json();
  EXPECT_EQ(j["cells"].size(), report.cells.size());
  EXPECT_TRUE(j.contains("category_split"));
  EXPECT_TRUE(j.contains("attention"));
  const std::string text = report.to_text();
  for (const char* m : {"masked", "average", "weighted"}) EXPECT_NE(text.find(m), std::string::npos);
}

TEST(Ablation, GridSizesAndStyleVariants) {
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.epochs_step1 = 1;
  tc.epochs_step2 = 1;
  tc.batch_step1 = 4;
  tc.batch_step2 = 3;
  tc.i_train = 3;
  tc.samples_per_epoch_step2 = 3;
  BenchmarkConfig b = small_bench();
  b.n_samplings = 1;
  const AblationReport l = run_ablation_l(models(), corpus(), tc, b, {1, 2, 4});
  ASSERT_EQ(l.rows.size(), 3u);
  for (const auto& row : l.rows) {
    EXPECT_EQ(row.embedding_length, models().config.content_dim);
    EXPECT_TRUE(std::isfinite(row.psnr.mean));
    EXPECT_TRUE(row.zero_style_identity);
  }
  EXPECT_EQ(l.rows[2].variant, "l=4");

  const AblationReport s = run_ablation_style(corpus(), tiny_net(), tc, LossConfig{}, b);
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_TRUE(s.rows[0].zero_style_identity);
  EXPECT_FALSE(s.rows[1].zero_style_identity);
  EXPECT_EQ(s.to_json()["rows"].size(), 2u);
}
