#pragma once

// The degrading model: an image-to-image net trained from enhanced images
// back to their originals, then applied to retouched images to manufacture
// pseudo originals.

#include "msm/corpus/corpus.hpp"
#include "msm/nets/layers.hpp"

#include <filesystem>
#include <utility>
#include <vector>

namespace msm {

struct DegraderConfig {
  int width = 16;
  int epochs = 30;
  int batch = 8;
  double lr = 1e-4;
  std::uint64_t seed = 11;

  void validate() const;
  bool operator==(const DegraderConfig&) const = default;
};

namespace nets {

/// Four 3x3 convolutions. A pooled summary of the second layer sets a
/// per-channel gain and shift before the third, giving every pixel global
/// context.
/// The output is input plus residual, clamped.
template <typename S>
class DegraderNet {
 public:
  DegraderNet() = default;
  DegraderNet(int width, Rng& rng);

  Var<S> forward(Bound<S>& b, Var<S> image) const;

  ParamSet<S>& params() { return params_; }
  const ParamSet<S>& params() const { return params_; }

 private:
  ParamSet<S> params_;
  Conv<S> c1_, c2_, c3_, c4_;
  Linear<S> context_, gain_, shift_;
};

}  // namespace nets

/// (enhanced, original)
using DegraderPair = std::pair<Image, Image>;

struct DegradeModel {
  nets::DegraderNet<float> net;
  DegraderConfig training_config;
  int image_size = 0;
  std::vector<double> epoch_losses;  ///< epoch_losses[0] is measured before the first update

  double final_loss() const { return epoch_losses.empty() ? 0.0 : epoch_losses.back(); }
};

DegradeModel train_degrader(const std::vector<DegraderPair>& pairs, const DegraderConfig& cfg);
/// Throws DimensionMismatch when the image is not image_size square.
Image degrade(const DegradeModel& model, const Image& retouched);
double degrader_mae(const DegradeModel& model, const std::vector<DegraderPair>& pairs);

/// K operator draws per clean scene. Scenes use seeds disjoint from the
/// corpus users; split selects an independent set (0 train, 1 validation).
std::vector<DegraderPair> make_degrader_pairs(const CorpusConfig& cfg, int n_originals, int split);

/// Replaces every known user's originals by degrade(retouched), quantized to 8 bits.
void apply_pseudo_originals(Corpus& corpus, const DegradeModel& model);

void save_degrader(const DegradeModel& model, const std::filesystem::path& path);
DegradeModel load_degrader(const std::filesystem::path& path);

}  // namespace msm
