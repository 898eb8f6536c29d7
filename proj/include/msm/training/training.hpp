#pragma once

#include "msm/corpus/corpus.hpp"
#include "msm/nets/models.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace msm {

struct LossConfig {
  double w_color = 1.0;
  double w_perceptual = 0.05;
  double w_tv = 0.1;
  int perceptual_channels = 8;          ///< width of the frozen random feature extractor
  std::uint64_t perceptual_seed = 1234;

  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

struct TrainConfig {
  double lr = 1e-4;
  int epochs_step1 = 40;
  int epochs_step2 = 30;
  int batch_step1 = 64;
  int batch_step2 = 32;
  int i_train = 10;
  int samples_per_epoch_step2 = 0;  ///< 0: known pairs / (i_train + 1)
  std::uint64_t seed = 3;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Fixed random-weight convolutional feature map used by the perceptual term.
template <typename S>
class PerceptualExtractor {
 public:
  PerceptualExtractor() = default;
  PerceptualExtractor(int channels, std::uint64_t seed);

  ad::Var<S> features(ad::Tape<S>& tape, ad::Var<S> image) const;
  const ad::ParamSet<S>& params() const { return params_; }

 private:
  ad::ParamSet<S> params_;
  nets::Conv<S> c1_, c2_;
};

/// w_color * MAE(pred, target) + w_perceptual * MAE(phi(pred), phi(target)) + w_tv * TV(pred).
template <typename S>
ad::Var<S> loss_pienet(ad::Var<S> target, ad::Var<S> pred, const LossConfig& cfg, const PerceptualExtractor<S>& phi);

/// Image-level convenience; builds the extractor from cfg.
double loss_pienet(const Image& target, const Image& pred, const LossConfig& cfg);

struct EpochRecord {
  int step = 0;
  int epoch = 0;
  double loss = 0.0;
  double seconds = 0.0;
};

/// Per-epoch metrics of both training steps.
struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::function<void(const EpochRecord&)> on_epoch;

  void record(const EpochRecord& r);
  std::vector<double> losses(int step) const;
  nlohmann::json to_json() const;
};

/// Step 1: trains the style encoder and enhancer jointly on every known pair
/// (L1 = loss_pienet(y, f_en(x, f_st(x, y)))). Returns per-epoch mean losses,
/// preceded by the loss at initialization.
std::vector<double> train_step1(Models& models, const Corpus& corpus, const TrainConfig& tc, const LossConfig& lc,
                                TrainLog* log = nullptr);

/// Step 2: trains the content encoder and transformer to predict the masked
/// style of the last of I_train + 1 shuffled pairs; the style encoder is
/// frozen and its styles are the targets. Returns losses as in step 1.
std::vector<double> train_step2(Models& models, const Corpus& corpus, const TrainConfig& tc, TrainLog* log = nullptr);

/// Mean PSNR of f_en(x, f_st(x, y)) against y over every known pair.
double reconstruction_psnr(const Models& models, const Corpus& corpus, std::size_t max_pairs = 0);

}  // namespace msm
