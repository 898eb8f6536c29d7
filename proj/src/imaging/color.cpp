#include "msm/imaging/color.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace msm {

namespace {

constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;
constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

double srgb_to_linear(double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); }
double linear_to_srgb(double v) { return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055; }

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }
double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kEpsilon ? f3 : (116.0 * f - 16.0) / kKappa;
}

const Eigen::Matrix3d& rgb_to_xyz() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.4124564, 0.3575761, 0.1804375,  //
                                    0.2126729, 0.7151522, 0.0721750,                       //
                                    0.0193339, 0.1191920, 0.9503041)
                                       .finished();
  return m;
}

}  // namespace

Eigen::Vector3d srgb_to_lab(const Eigen::Vector3d& rgb) {
  const Eigen::Vector3d lin = rgb.unaryExpr([](double v) { return srgb_to_linear(v); });
  const Eigen::Vector3d xyz = rgb_to_xyz() * lin;
  const double fx = lab_f(xyz(0) / kWhiteX);
  const double fy = lab_f(xyz(1) / kWhiteY);
  const double fz = lab_f(xyz(2) / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Eigen::Vector3d lab_to_srgb(const Eigen::Vector3d& lab) {
  const double fy = (lab(0) + 16.0) / 116.0;
  const double fx = fy + lab(1) / 500.0;
  const double fz = fy - lab(2) / 200.0;
  const Eigen::Vector3d xyz(lab_f_inv(fx) * kWhiteX, lab_f_inv(fy) * kWhiteY, lab_f_inv(fz) * kWhiteZ);
  const Eigen::Vector3d lin = rgb_to_xyz().inverse() * xyz;
  return lin.unaryExpr([](double v) { return linear_to_srgb(v); });
}

Eigen::Vector3d rgb_to_hsv(const Eigen::Vector3d& rgb) {
  const double mx = rgb.maxCoeff(), mn = rgb.minCoeff();
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0) {
    if (mx == rgb(0))
      h = std::fmod((rgb(1) - rgb(2)) / d, 6.0);
    else if (mx == rgb(1))
      h = (rgb(2) - rgb(0)) / d + 2.0;
    else
      h = (rgb(0) - rgb(1)) / d + 4.0;
    h /= 6.0;
    if (h < 0) h += 1.0;
  }
  return {h, mx > 0 ? d / mx : 0.0, mx};
}

Eigen::Vector3d hsv_to_rgb(const Eigen::Vector3d& hsv) {
  const double h = (hsv(0) - std::floor(hsv(0))) * 6.0;
  const double s = std::clamp(hsv(1), 0.0, 1.0), v = std::clamp(hsv(2), 0.0, 1.0);
  const int sector = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

}  // namespace msm
