#pragma once

// Evaluation protocol: repeated sampling of a preferred set from each
// held-out user, every remaining pair scored as an unseen image.

#include "msm/corpus/corpus.hpp"
#include "msm/personalize/personalize.hpp"
#include "msm/training/training.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace msm {

struct BenchmarkConfig {
  std::vector<int> i_new_values{1, 2, 5, 20, 50};
  int n_samplings = 10;
  std::uint64_t seed = 17;
  std::vector<std::string> methods{"masked", "average", "weighted"};
  bool category_split = true;
  int category_i_new = 20;  ///< preferred-set size for the category split and attention statistics

  void validate() const;
  bool operator==(const BenchmarkConfig&) const = default;
};

/// Known method ids: masked, average, weighted, pienet.
bool is_known_method(const std::string& id);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  ///< population standard deviation over samplings
};

Stat summarize(const std::vector<double>& values);

struct BenchmarkCell {
  std::string method;
  int i_new = 0;
  int samplings = 0;
  long unseen_images = 0;  ///< total scored images over all samplings
  Stat psnr, ssim, delta_e;
};

/// matrix[e][c]: mean masked PSNR on unseen images of class c when class e
/// was excluded from the preferred set.
struct CategorySplit {
  int i_new = 0;
  std::vector<std::vector<double>> matrix;
  std::vector<std::vector<long>> counts;
  double excluded_mean = 0.0;  ///< diagonal
  double included_mean = 0.0;  ///< off-diagonal
};

struct AttentionStats {
  double same_class_mass = 0.0;  ///< mean rollout mass on same-class preferred pairs
  double uniform_share = 0.0;    ///< mean k_same / I
  long unseen_images = 0;

  double margin() const { return same_class_mass - uniform_share; }
};

struct BenchmarkReport {
  nlohmann::json config;
  std::vector<BenchmarkCell> cells;
  std::optional<CategorySplit> category;
  std::optional<AttentionStats> attention;

  /// Throws InvalidInput when the cell is absent.
  const BenchmarkCell& cell(const std::string& method, int i_new) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Evaluates every configured (method, I_new) cell. pienet may be null unless
/// the "pienet" method is requested. Throws InvalidInput when an I_new leaves
/// a held-out user without unseen pairs.
BenchmarkReport run_benchmark(const Models& models, const Corpus& corpus, const BenchmarkConfig& cfg,
                              const PieNetModels* pienet = nullptr);

CategorySplit run_category_split(const Models& models, const Corpus& corpus, const BenchmarkConfig& cfg);

AttentionStats attention_contentedness(const Models& models, const Corpus& corpus, const BenchmarkConfig& cfg);

// ---------------------------------------------------------------- ablations

struct AblationRow {
  std::string variant;
  int embedding_length = 0;
  Stat psnr;
  bool zero_style_identity = false;
};

struct AblationReport {
  std::string name;
  std::vector<AblationRow> rows;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Retrains step 2 for each grid size l on top of the step-1 networks in
/// base and scores the masked method at cfg.category_i_new.
AblationReport run_ablation_l(const Models& base, const Corpus& corpus, const TrainConfig& tc,
                              const BenchmarkConfig& cfg, const std::vector<int>& l_values = {1, 2, 4, 8});

/// Trains the residual and absolute style variants (reusing residual when
/// given) and scores the masked method at cfg.category_i_new.
AblationReport run_ablation_style(const Corpus& corpus, const NetConfig& net, const TrainConfig& tc,
                                  const LossConfig& lc, const BenchmarkConfig& cfg,
                                  const Models* residual = nullptr, const Models* absolute = nullptr);

/// True when style_embed(x, x) is exactly zero for every original in the held-out pairs.
bool zero_style_identity(const Models& models, const Corpus& corpus);

}  // namespace msm
