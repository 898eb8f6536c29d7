#include "msm/imaging/metrics.hpp"

#include "msm/errors.hpp"
#include "msm/imaging/color.hpp"

#include <array>
#include <cmath>

namespace msm {

double psnr(const Image& a, const Image& b) {
  require_same_size(a, b, "psnr");
  const double mse = (a.pixels().cast<double>() - b.pixels().cast<double>()).squaredNorm() /
                     static_cast<double>(a.pixels().size());
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

using Plane = Eigen::ArrayXXd;  // rows = y, cols = x

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Separable 'valid' filtering with the normalized Gaussian.
Plane filter_valid(const Plane& in) {
  static const auto g = gaussian_taps();
  const long h = in.rows(), w = in.cols();
  Plane horiz = Plane::Zero(h, w - kWindow + 1);
  for (int k = 0; k < kWindow; ++k) horiz += g[static_cast<std::size_t>(k)] * in.middleCols(k, w - kWindow + 1);
  Plane out = Plane::Zero(h - kWindow + 1, w - kWindow + 1);
  for (int k = 0; k < kWindow; ++k) out += g[static_cast<std::size_t>(k)] * horiz.middleRows(k, h - kWindow + 1);
  return out;
}

Plane channel_plane(const Image& img, int c) {
  Plane p(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) p(y, x) = img.at(y, x, c);
  return p;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  require_same_size(a, b, "ssim");
  if (a.height() < kWindow || a.width() < kWindow)
    throw InvalidInput("ssim: images must be at least 11x11");
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Plane x = channel_plane(a, c), y = channel_plane(b, c);
    const Plane mx = filter_valid(x), my = filter_valid(y);
    const Plane sxx = filter_valid(x * x) - mx * mx;
    const Plane syy = filter_valid(y * y) - my * my;
    const Plane sxy = filter_valid(x * y) - mx * my;
    const Plane map = ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
    total += map.mean();
  }
  return total / 3.0;
}

double delta_e_ab(const Image& a, const Image& b) {
  require_same_size(a, b, "delta_e_ab");
  double total = 0.0;
  for (long i = 0; i < a.pixel_count(); ++i) {
    const Eigen::Vector3d la = srgb_to_lab(a.pixels().col(i).cast<double>());
    const Eigen::Vector3d lb = srgb_to_lab(b.pixels().col(i).cast<double>());
    total += (la - lb).norm();
  }
  return total / static_cast<double>(a.pixel_count());
}

MetricReport evaluate_metrics(const Image& reference, const Image& candidate) {
  return {psnr(reference, candidate), ssim(reference, candidate), delta_e_ab(reference, candidate)};
}

}  // namespace msm
