#pragma once

#include "msm/imaging/image.hpp"

#include <utility>
#include <vector>

namespace msm {

/// Parameters of the global retouch operator bank.
///
/// The operators run in a fixed order: exposure, temperature, tone curve,
/// gamma, contrast S-curve, saturation. Each stage clamps to [0, 1]. A stage
/// at its identity value is skipped, so identity parameters reproduce the
/// input bit for bit.
struct RetouchParams {
  double gamma = 1.0;              ///< v -> v^gamma, > 0
  double exposure_ev = 0.0;        ///< v -> v * 2^ev
  double contrast = 1.0;           ///< slope of the S-curve at mid grey, > 0
  double saturation = 1.0;         ///< chroma gain around luma, >= 0
  double temperature_shift = 0.0;  ///< red gain 1+t, blue gain 1-t, |t| < 1
  /// Strictly increasing (in, out) knots inside [0, 1]; (0,0) and (1,1) are implied.
  std::vector<std::pair<double, double>> tone_curve_knots;

  bool is_identity() const;
  /// Throws InvalidInput on any violated invariant.
  void validate() const;

  bool operator==(const RetouchParams&) const = default;
};

Image apply_retouch(const Image& img, const RetouchParams& params);

/// Piecewise-linear tone curve through (0,0), knots, (1,1).
double tone_curve(double v, const std::vector<std::pair<double, double>>& knots);

/// v^c / (v^c + (1-v)^c): monotone, fixes 0, 1/2 and 1, slope c at 1/2.
double contrast_curve(double v, double c);

}  // namespace msm
