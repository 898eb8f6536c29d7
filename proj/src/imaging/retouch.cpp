#include "msm/imaging/retouch.hpp"

#include "msm/errors.hpp"
#include "msm/imaging/color.hpp"

#include <algorithm>
#include <cmath>

namespace msm {

bool RetouchParams::is_identity() const {
  return gamma == 1.0 && exposure_ev == 0.0 && contrast == 1.0 && saturation == 1.0 && temperature_shift == 0.0 &&
         tone_curve_knots.empty();
}

void RetouchParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("retouch: gamma must be > 0");
  if (!std::isfinite(exposure_ev)) throw InvalidInput("retouch: exposure_ev must be finite");
  if (!(contrast > 0.0) || !std::isfinite(contrast)) throw InvalidInput("retouch: contrast must be > 0");
  if (!(saturation >= 0.0) || !std::isfinite(saturation)) throw InvalidInput("retouch: saturation must be >= 0");
  if (!(std::abs(temperature_shift) < 1.0)) throw InvalidInput("retouch: |temperature_shift| must be < 1");
  double prev_in = 0.0, prev_out = 0.0;
  bool first = true;
  for (const auto& [in, out] : tone_curve_knots) {
    if (in < 0.0 || in > 1.0 || out < 0.0 || out > 1.0)
      throw InvalidInput("retouch: tone curve knots must lie in [0,1]");
    if (!first && (in <= prev_in || out <= prev_out))
      throw InvalidInput("retouch: tone curve knots must be strictly increasing");
    prev_in = in;
    prev_out = out;
    first = false;
  }
}

double tone_curve(double v, const std::vector<std::pair<double, double>>& knots) {
  double x0 = 0.0, y0 = 0.0;
  for (const auto& [x1, y1] : knots) {
    if (v <= x1) return x1 > x0 ? y0 + (y1 - y0) * (v - x0) / (x1 - x0) : y1;
    x0 = x1;
    y0 = y1;
  }
  return x0 < 1.0 ? y0 + (1.0 - y0) * (v - x0) / (1.0 - x0) : y0;
}

double contrast_curve(double v, double c) {
  if (v <= 0.0) return 0.0;
  if (v >= 1.0) return 1.0;
  const double a = std::pow(v, c), b = std::pow(1.0 - v, c);
  return a / (a + b);
}

Image apply_retouch(const Image& img, const RetouchParams& p) {
  p.validate();
  if (p.is_identity()) return img;

  Eigen::Array<double, 3, Eigen::Dynamic> px = img.pixels().cast<double>().array();
  auto clamp01 = [&px]() { px = px.max(0.0).min(1.0); };

  if (p.exposure_ev != 0.0) {
    px *= std::exp2(p.exposure_ev);
    clamp01();
  }
  if (p.temperature_shift != 0.0) {
    px.row(0) *= 1.0 + p.temperature_shift;
    px.row(2) *= 1.0 - p.temperature_shift;
    clamp01();
  }
  if (!p.tone_curve_knots.empty()) {
    px = px.unaryExpr([&p](double v) { return tone_curve(v, p.tone_curve_knots); });
    clamp01();
  }
  if (p.gamma != 1.0) {
    px = px.pow(p.gamma);
    clamp01();
  }
  if (p.contrast != 1.0) {
    px = px.unaryExpr([c = p.contrast](double v) { return contrast_curve(v, c); });
    clamp01();
  }
  if (p.saturation != 1.0) {
    const Eigen::Array<double, 1, Eigen::Dynamic> luma = kLumaR * px.row(0) + kLumaG * px.row(1) + kLumaB * px.row(2);
    for (int c = 0; c < 3; ++c) px.row(c) = luma + p.saturation * (px.row(c) - luma);
    clamp01();
  }
  return Image(img.height(), img.width(), px.matrix().cast<float>());
}

}  // namespace msm
