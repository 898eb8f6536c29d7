#pragma once

#include "msm/imaging/image.hpp"

namespace msm {

inline constexpr double kPsnrCapDb = 100.0;

/// 10*log10(1/MSE) over all channels; identical images give kPsnrCapDb.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over channels with an 11x11 Gaussian window (sigma 1.5),
/// k1 = 0.01, k2 = 0.03, L = 1, evaluated on valid window positions only.
double ssim(const Image& a, const Image& b);

/// Mean per-pixel CIE76 colour difference in CIELAB (D65).
double delta_e_ab(const Image& a, const Image& b);

struct MetricReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double delta_e_ab = 0.0;
};

MetricReport evaluate_metrics(const Image& reference, const Image& candidate);

}  // namespace msm
