#include "msm/eval/benchmark.hpp"

#include "msm/errors.hpp"
#include "msm/imaging/metrics.hpp"
#include "msm/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace msm {

namespace {

const std::vector<std::string> kMethods{"masked", "average", "weighted", "pienet"};

/// Embeddings of every pair of one held-out user under a fixed model.
struct UserCache {
  const UserRecord* user = nullptr;
  std::vector<ContentEmbedding> contents;
  std::vector<StyleEmbedding> styles;
};

std::vector<UserCache> cache_users(const Models& m, const Corpus& corpus) {
  std::vector<UserCache> out;
  for (const auto* u : corpus.held_out_users()) {
    UserCache c;
    c.user = u;
    for (const auto& p : u->set.pairs) {
      c.contents.push_back(content_embed(m, p.original));
      c.styles.push_back(style_embed(m, p.original, p.retouched));
    }
    out.push_back(std::move(c));
  }
  if (out.empty()) throw InvalidInput("benchmark: corpus has no held-out users");
  return out;
}

struct Split {
  std::vector<std::size_t> preferred, unseen;
};

/// Draws i_new preferred pairs (never of class `excluded`); the rest are unseen.
Split draw_split(const UserRecord& u, int i_new, Rng& rng, int excluded = -1) {
  std::vector<std::size_t> candidates, rest;
  for (std::size_t i = 0; i < u.set.size(); ++i)
    (u.set.pairs[i].content_class == excluded ? rest : candidates).push_back(i);
  if (static_cast<std::size_t>(i_new) > candidates.size() ||
      static_cast<std::size_t>(i_new) >= u.set.size())
    throw InvalidInput("benchmark: I_new = " + std::to_string(i_new) + " exceeds the pairs available for " +
                       u.set.user_label);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  Split s;
  s.preferred.assign(candidates.begin(), candidates.begin() + i_new);
  s.unseen = rest;
  s.unseen.insert(s.unseen.end(), candidates.begin() + i_new, candidates.end());
  std::sort(s.unseen.begin(), s.unseen.end());
  return s;
}

PreparedPreferences prepared(const UserCache& c, const std::vector<std::size_t>& idx) {
  PreparedPreferences p;
  for (auto i : idx) {
    p.contents.push_back(c.contents[i]);
    p.styles.push_back(c.styles[i]);
  }
  return p;
}

std::uint64_t seed_for(const BenchmarkConfig& cfg, std::uint64_t kind, int i_new, int sampling, std::size_t user,
                       int extra = 0) {
  return derive_seed(cfg.seed, {kind, static_cast<std::uint64_t>(i_new), static_cast<std::uint64_t>(sampling),
                                static_cast<std::uint64_t>(user), static_cast<std::uint64_t>(extra)});
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string pm(const Stat& s, int precision) { return fixed(s.mean, precision) + " ± " + fixed(s.std, precision); }

nlohmann::json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

bool is_known_method(const std::string& id) {
  return std::find(kMethods.begin(), kMethods.end(), id) != kMethods.end();
}

void BenchmarkConfig::validate() const {
  if (i_new_values.empty()) throw ConfigError("benchmark.i_new_values", "must not be empty");
  for (int v : i_new_values)
    if (v < 1) throw ConfigError("benchmark.i_new_values", "every value must be at least 1");
  if (n_samplings < 1) throw ConfigError("benchmark.n_samplings", "must be at least 1");
  if (methods.empty()) throw ConfigError("benchmark.methods", "must not be empty");
  for (const auto& m : methods)
    if (!is_known_method(m)) throw ConfigError("benchmark.methods", "unknown method '" + m + "'");
  if (category_i_new < 1) throw ConfigError("benchmark.category_i_new", "must be at least 1");
}

Stat summarize(const std::vector<double>& values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / n)};
}

const BenchmarkCell& BenchmarkReport::cell(const std::string& method, int i_new) const {
  for (const auto& c : cells)
    if (c.method == method && c.i_new == i_new) return c;
  throw InvalidInput("benchmark report has no cell for " + method + " at I_new = " + std::to_string(i_new));
}

BenchmarkReport run_benchmark(const Models& models, const Corpus& corpus, const BenchmarkConfig& cfg,
                              const PieNetModels* pienet) {
  cfg.validate();
  const bool want_pienet = std::find(cfg.methods.begin(), cfg.methods.end(), "pienet") != cfg.methods.end();
  if (want_pienet && pienet == nullptr) throw MissingArtifact("benchmark: method 'pienet' needs the PieNet baseline");
  const auto users = cache_users(models, corpus);

  BenchmarkReport report;
  report.config = cfg;
  for (int i_new : cfg.i_new_values) {
    struct Acc {
      std::vector<double> psnr, ssim, de;
      long images = 0;
    };
    std::vector<Acc> acc(cfg.methods.size());
    for (int k = 0; k < cfg.n_samplings; ++k) {
      std::vector<MetricReport> sums(cfg.methods.size());
      long count = 0;
      for (std::size_t ui = 0; ui < users.size(); ++ui) {
        const UserCache& uc = users[ui];
        Rng rng(seed_for(cfg, 0, i_new, k, ui));
        const Split split = draw_split(*uc.user, i_new, rng);
        const PreparedPreferences prep = prepared(uc, split.preferred);
        const StyleEmbedding avg = average_style(prep);
        std::optional<PreferenceVector> v;
        if (want_pienet) {
          PreferredSet ps;
          for (auto i : split.preferred) ps.pairs.push_back(uc.user->set.pairs[i]);
          v = pienet_preference(*pienet, ps);
        }
        for (auto j : split.unseen) {
          const PreferredPair& target = uc.user->set.pairs[j];
          for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            const std::string& method = cfg.methods[mi];
            Image out;
            if (method == "masked")
              out = enhance(models, target.original, masked_style(models, prep, uc.contents[j]));
            else if (method == "average")
              out = enhance(models, target.original, avg);
            else if (method == "weighted")
              out = enhance(models, target.original, weighted_style(prep, uc.contents[j]));
            else
              out = personalize_pienet(*pienet, *v, target.original);
            const MetricReport r = evaluate_metrics(target.retouched, out);
            sums[mi].psnr_db += r.psnr_db;
            sums[mi].ssim += r.ssim;
            sums[mi].delta_e_ab += r.delta_e_ab;
          }
          ++count;
        }
      }
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        acc[mi].psnr.push_back(sums[mi].psnr_db / static_cast<double>(count));
        acc[mi].ssim.push_back(sums[mi].ssim / static_cast<double>(count));
        acc[mi].de.push_back(sums[mi].delta_e_ab / static_cast<double>(count));
        acc[mi].images += count;
      }
    }
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
      report.cells.push_back({cfg.methods[mi], i_new, cfg.n_samplings, acc[mi].images, summarize(acc[mi].psnr),
                              summarize(acc[mi].ssim), summarize(acc[mi].de)});
  }
  if (cfg.category_split) {
    report.category = run_category_split(models, corpus, cfg);
    report.attention = attention_contentedness(models, corpus, cfg);
  }
  return report;
}

CategorySplit run_category_split(const Models& models, const Corpus& corpus, const BenchmarkConfig& cfg) {
  cfg.validate();
  const auto users = cache_users(models, corpus);
  const int nc = corpus.config.n_content_classes;
  CategorySplit out;
  out.i_new = cfg.category_i_new;
  std::vector<std::vector<double>> sum(static_cast<std::size_t>(nc), std::vector<double>(static_cast<std::size_t>(nc)));
  out.counts.assign(static_cast<std::size_t>(nc), std::vector<long>(static_cast<std::size_t>(nc), 0));
  for (int e = 0; e < nc; ++e)
    for (int k = 0; k < cfg.n_samplings; ++k)
      for (std::size_t ui = 0; ui < users.size(); ++ui) {
        const UserCache& uc = users[ui];
        Rng rng(seed_for(cfg, 1, cfg.category_i_new, k, ui, e));
        const Split split = draw_split(*uc.user, cfg.category_i_new, rng, e);
        const PreparedPreferences prep = prepared(uc, split.preferred);
        for (auto j : split.unseen) {
          const PreferredPair& target = uc.user->set.pairs[j];
          const Image img = enhance(models, target.original, masked_style(models, prep, uc.contents[j]));
          const auto c = static_cast<std::size_t>(target.content_class);
          sum[static_cast<std::size_t>(e)][c] += psnr(target.retouched, img);
          ++out.counts[static_cast<std::size_t>(e)][c];
        }
      }
  out.matrix = sum;
  double diag = 0.0, off = 0.0;
  int n_diag = 0, n_off = 0;
  for (std::size_t e = 0; e < sum.size(); ++e)
    for (std::size_t c = 0; c < sum.size(); ++c) {
      const long n = out.counts[e][c];
      out.matrix[e][c] = n > 0 ? sum[e][c] / static_cast<double>(n) : 0.0;
      if (n == 0) continue;
      if (e == c) {
        diag += out.matrix[e][c];
        ++n_diag;
      } else {
        off += out.matrix[e][c];
        ++n_off;
      }
    }
  out.excluded_mean = n_diag > 0 ? diag / n_diag : 0.0;
  out.included_mean = n_off > 0 ? off / n_off : 0.0;
  return out;
}

AttentionStats attention_contentedness(const Models& models, const Corpus& corpus, const BenchmarkConfig& cfg) {
  cfg.validate();
  const auto users = cache_users(models, corpus);
  AttentionStats out;
  double mass = 0.0, share = 0.0;
  for (int k = 0; k < cfg.n_samplings; ++k)
    for (std::size_t ui = 0; ui < users.size(); ++ui) {
      const UserCache& uc = users[ui];
      Rng rng(seed_for(cfg, 2, cfg.category_i_new, k, ui));
      const Split split = draw_split(*uc.user, cfg.category_i_new, rng);
      const PreparedPreferences prep = prepared(uc, split.preferred);
      for (auto j : split.unseen) {
        const int cls = uc.user->set.pairs[j].content_class;
        std::vector<double> w;
        masked_style(models, prep, uc.contents[j], &w);
        int same = 0;
        for (std::size_t i = 0; i < split.preferred.size(); ++i)
          if (uc.user->set.pairs[split.preferred[i]].content_class == cls) {
            mass += w[i];
            ++same;
          }
        share += static_cast<double>(same) / static_cast<double>(split.preferred.size());
        ++out.unseen_images;
      }
    }
  if (out.unseen_images > 0) {
    out.same_class_mass = mass / static_cast<double>(out.unseen_images);
    out.uniform_share = share / static_cast<double>(out.unseen_images);
  }
  return out;
}

nlohmann::json BenchmarkReport::to_json() const {
  nlohmann::json j;
  j["config"] = config;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : cells)
    j["cells"].push_back({{"method", c.method},
                          {"i_new", c.i_new},
                          {"samplings", c.samplings},
                          {"unseen_images", c.unseen_images},
                          {"psnr", stat_json(c.psnr)},
                          {"ssim", stat_json(c.ssim)},
                          {"delta_e", stat_json(c.delta_e)}});
  if (category)
    j["category_split"] = {{"i_new", category->i_new},
                           {"matrix", category->matrix},
                           {"counts", category->counts},
                           {"excluded_mean_psnr", category->excluded_mean},
                           {"included_mean_psnr", category->included_mean}};
  if (attention)
    j["attention"] = {{"same_class_mass", attention->same_class_mass},
                      {"uniform_share", attention->uniform_share},
                      {"unseen_images", attention->unseen_images}};
  return j;
}

std::string BenchmarkReport::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(10) << "method" << std::right << std::setw(7) << "I_new" << std::setw(18) << "PSNR (dB)"
     << std::setw(18) << "SSIM" << std::setw(18) << "dE_ab" << std::setw(10) << "n" << '\n';
  for (const auto& c : cells)
    os << std::left << std::setw(10) << c.method << std::right << std::setw(7) << c.i_new << std::setw(19)
       << pm(c.psnr, 2) << std::setw(19) << pm(c.ssim, 4) << std::setw(19) << pm(c.delta_e, 2) << std::setw(10)
       << c.samplings << '\n';
  if (category) {
    os << "\ncategory split (masked PSNR, I_new = " << category->i_new << "; rows: excluded class, cols: unseen class)\n";
    for (std::size_t e = 0; e < category->matrix.size(); ++e) {
      os << std::setw(10) << ("excl " + std::to_string(e));
      for (double v : category->matrix[e]) os << std::setw(10) << fixed(v, 2);
      os << '\n';
    }
    os << "excluded-class mean " << fixed(category->excluded_mean, 2) << " dB, included-class mean "
       << fixed(category->included_mean, 2) << " dB\n";
  }
  if (attention)
    os << "\nattention on same-class pairs " << fixed(attention->same_class_mass, 3) << " vs uniform share "
       << fixed(attention->uniform_share, 3) << '\n';
  return os.str();
}

// ---------------------------------------------------------------- ablations

nlohmann::json AblationReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"variant", r.variant},
                         {"embedding_length", r.embedding_length},
                         {"psnr", stat_json(r.psnr)},
                         {"zero_style_identity", r.zero_style_identity}});
  return j;
}

std::string AblationReport::to_text() const {
  std::ostringstream os;
  os << name << '\n'
     << std::left << std::setw(12) << "variant" << std::right << std::setw(8) << "length" << std::setw(18) << "PSNR (dB)"
     << std::setw(12) << "s(x,x)=0" << '\n';
  for (const auto& r : rows)
    os << std::left << std::setw(12) << r.variant << std::right << std::setw(8) << r.embedding_length << std::setw(19)
       << pm(r.psnr, 2) << std::setw(12) << (r.zero_style_identity ? "yes" : "no") << '\n';
  return os.str();
}

namespace {

Stat masked_psnr(const Models& m, const Corpus& corpus, const BenchmarkConfig& cfg) {
  BenchmarkConfig one = cfg;
  one.i_new_values = {cfg.category_i_new};
  one.methods = {"masked"};
  one.category_split = false;
  return run_benchmark(m, corpus, one).cell("masked", cfg.category_i_new).psnr;
}

}  // namespace

bool zero_style_identity(const Models& models, const Corpus& corpus) {
  for (const auto* u : corpus.held_out_users())
    for (const auto& p : u->set.pairs)
      if (!style_embed(models, p.original, p.original).values.isZero(0.0)) return false;
  return true;
}

AblationReport run_ablation_l(const Models& base, const Corpus& corpus, const TrainConfig& tc,
                              const BenchmarkConfig& cfg, const std::vector<int>& l_values) {
  AblationReport report;
  report.name = "content grid l";
  for (int l : l_values) {
    NetConfig net = base.config;
    net.grid = l;
    Models m = Models::initialize(net, base.style_mode);
    m.style = base.style;
    m.enhancer = base.enhancer;
    train_step2(m, corpus, tc);
    const auto& probe = corpus.held_out_users().front()->set.pairs.front().original;
    report.rows.push_back({"l=" + std::to_string(l), static_cast<int>(content_embed(m, probe).values.size()),
                           masked_psnr(m, corpus, cfg), zero_style_identity(m, corpus)});
  }
  return report;
}

AblationReport run_ablation_style(const Corpus& corpus, const NetConfig& net, const TrainConfig& tc,
                                  const LossConfig& lc, const BenchmarkConfig& cfg, const Models* residual,
                                  const Models* absolute) {
  AblationReport report;
  report.name = "style embedding";
  for (StyleMode mode : {StyleMode::Residual, StyleMode::Absolute}) {
    const Models* given = mode == StyleMode::Residual ? residual : absolute;
    Models trained;
    if (given == nullptr) {
      trained = Models::initialize(net, mode);
      train_step1(trained, corpus, tc, lc);
      train_step2(trained, corpus, tc);
      given = &trained;
    }
    report.rows.push_back({mode == StyleMode::Residual ? "f(y)-f(x)" : "f(y)", given->config.style_dim,
                           masked_psnr(*given, corpus, cfg), zero_style_identity(*given, corpus)});
  }
  return report;
}

}  // namespace msm
