#pragma once

// Central finite-difference verification of reverse-mode gradients.

#include "msm/ad/tape.hpp"
#include "msm/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace msm::ad {

inline constexpr double kGradFloor = 1e-5;

struct GradCheckEntry {
  std::string name;
  // ||analytic - numeric|| / max(||analytic|| + ||numeric||, kGradFloor) over probed entries. The floor keeps
  // parameters whose true gradient is zero (a bias cancelled by a difference or a softmax) from scoring
  // finite-difference noise as a relative error of 1.
  double rel_error = 0.0;
  double analytic_norm = 0.0;
  int probed = 0;
};

struct GradCheckResult {
  std::vector<GradCheckEntry> entries;
  double worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.rel_error);
    return w;
  }
};

/// `loss` builds a scalar on a fresh tape from `params`. Up to `max_probes`
/// entries per parameter tensor are perturbed by +-eps.
template <typename LossFn>
GradCheckResult check_gradients(ParamSet<double>& params, LossFn&& loss, double eps = 1e-6, int max_probes = 24,
                                std::uint64_t seed = 17) {
  params.zero_grad();
  {
    Tape<double> tape;
    auto root = loss(tape);
    tape.backward(root);
  }
  auto evaluate = [&]() {
    Tape<double> tape;
    return loss(tape).value()(0, 0);
  };

  Rng rng(seed);
  GradCheckResult result;
  for (int pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    const Matrix<double> analytic = p.grad;
    const long n = p.value.size();
    std::vector<long> idx(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    if (n > max_probes) idx.resize(static_cast<std::size_t>(max_probes));

    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (long i : idx) {
      const double saved = p.value(i);
      p.value(i) = saved + eps;
      const double up = evaluate();
      p.value(i) = saved - eps;
      const double down = evaluate();
      p.value(i) = saved;
      const double numeric = (up - down) / (2.0 * eps);
      diff2 += (analytic(i) - numeric) * (analytic(i) - numeric);
      a2 += analytic(i) * analytic(i);
      n2 += numeric * numeric;
    }
    GradCheckEntry e;
    e.name = p.name;
    e.probed = static_cast<int>(idx.size());
    e.analytic_norm = std::sqrt(a2);
    const double denom = std::sqrt(a2) + std::sqrt(n2);
    e.rel_error = std::sqrt(diff2) / std::max(denom, kGradFloor);
    result.entries.push_back(e);
  }
  params.zero_grad();
  return result;
}

}  // namespace msm::ad
