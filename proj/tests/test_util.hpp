#pragma once

#include "msm/corpus/corpus.hpp"
#include "msm/imaging/image.hpp"
#include "msm/nets/config.hpp"
#include "msm/random.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace msm::test {

inline Image random_image(Rng& rng, int h, int w, float lo = 0.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Image img(h, w);
  for (long i = 0; i < img.pixels().size(); ++i) img.pixels().data()[i] = u(rng);
  return img;
}

/// Small but structurally complete networks: every stage present, fast enough for unit tests.
inline NetConfig tiny_net(int grid = 2) {
  NetConfig c;
  c.style_dim = 8;
  c.content_dim = 16;
  c.grid = grid;
  c.transformer_layers = 2;
  c.heads = 2;
  c.ff_dim = 16;
  c.enhancer_levels = 2;
  c.base_channels = 4;
  c.embed_channels = 4;
  c.embed_input_size = 8;
  c.enhancer_input_size = 8;
  c.seed = 5;
  return c;
}

inline CorpusConfig tiny_corpus() {
  CorpusConfig c;
  c.n_users = 3;
  c.images_per_user = 6;
  c.n_test_users = 2;
  c.test_images_per_user = 9;
  c.image_size = 16;
  c.n_content_classes = 3;
  c.degrader_originals = 4;
  c.degrader_draws = 2;
  c.pseudo_pairs = false;
  c.seed = 21;
  return c;
}

/// Fresh scratch directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("msm_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace msm::test
