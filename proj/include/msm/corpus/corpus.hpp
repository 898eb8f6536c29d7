#pragma once

#include "msm/imaging/image.hpp"
#include "msm/imaging/retouch.hpp"
#include "msm/random.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace msm {

struct PreferredPair {
  Image original;
  Image retouched;
  int content_class = 0;
};

/// One user's (original, retouched) pairs.
struct PreferredSet {
  std::vector<PreferredPair> pairs;
  std::string user_label;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  /// Throws when pair sizes are inconsistent.
  void validate() const;
};

/// A synthetic retoucher. Content-independent users apply one parameter set
/// to every image; content-aware users keep one set per content class.
struct PseudoUser {
  int user_id = 0;
  bool content_aware = false;
  std::map<int, RetouchParams> style_table;

  const RetouchParams& params_for(int content_class) const;
};

struct CorpusConfig {
  int n_users = 24;                  ///< known (training) users, N
  int images_per_user = 60;          ///< I_n for known users
  int n_test_users = 4;              ///< held-out content-aware users
  int test_images_per_user = 80;
  int image_size = 32;
  int n_content_classes = 3;
  double content_aware_fraction = 0.75;
  int degrader_originals = 60;       ///< clean scenes used to fit the degrader
  int degrader_draws = 5;            ///< K operator draws per degrader original
  bool pseudo_pairs = true;          ///< replace known users' originals by degrade(retouched)
  std::uint64_t seed = 7;

  void validate() const;
  bool operator==(const CorpusConfig&) const = default;
};

struct UserRecord {
  PseudoUser user;
  PreferredSet set;
  bool held_out = false;
  bool pseudo_originals = false;
};

struct Corpus {
  CorpusConfig config;
  std::vector<UserRecord> users;

  std::vector<const UserRecord*> known_users() const;
  std::vector<const UserRecord*> held_out_users() const;
  std::size_t pair_count() const;
};

/// Procedural scene for a content class: class % 3 picks the layout
/// (landscape, portrait, architecture), class / 3 rotates the palette.
/// Pixels lie on the 8-bit grid, like a decoded photograph.
Image synth_scene(int class_id, std::uint64_t seed, int size);

/// Saturation-weighted circular mean hue in [0, 1).
double mean_hue(const Image& img);
/// Circular distance between two hues in [0, 0.5].
double hue_distance(double a, double b);

/// Draws retouch parameters from the operator family; spread scales every range.
RetouchParams sample_retouch(Rng& rng, double spread = 1.0);
PseudoUser make_pseudo_user(int user_id, bool content_aware, int n_classes, std::uint64_t seed);

/// Deterministic in cfg: every user and image draws from a seed derived from cfg.seed.
Corpus build_corpus(const CorpusConfig& cfg);

}  // namespace msm
