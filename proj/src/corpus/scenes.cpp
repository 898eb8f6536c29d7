#include "msm/corpus/corpus.hpp"

#include "msm/errors.hpp"
#include "msm/imaging/color.hpp"

#include <cmath>
#include <numbers>

namespace msm {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

double wrap_hue(double h) { return h - std::floor(h); }

struct Painter {
  Image img;
  double hue_shift;
  Rng& rng;

  void set(int y, int x, double h, double s, double v) {
    const Eigen::Vector3d rgb = hsv_to_rgb({wrap_hue(h + hue_shift), std::clamp(s, 0.0, 1.0), std::clamp(v, 0.0, 1.0)});
    for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(rgb(c));
  }
};

void paint_landscape(Painter& p, int size) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double horizon = 0.35 + 0.3 * u(p.rng);
  const double tilt = (u(p.rng) - 0.5) * 0.3;
  const double sky_h = 0.57 + 0.04 * (u(p.rng) - 0.5), sky_s = 0.5 + 0.1 * u(p.rng);
  const double grd_h = 0.29 + 0.06 * (u(p.rng) - 0.5), grd_s = 0.6 + 0.1 * u(p.rng);
  const double grd_v = 0.42 + 0.08 * u(p.rng);
  const double phase = kTau * u(p.rng), freq = 2.0 + 3.0 * u(p.rng);
  const bool sun = u(p.rng) < 0.5;
  const double sun_x = 0.2 + 0.6 * u(p.rng), sun_y = horizon * (0.2 + 0.5 * u(p.rng)), sun_r = 0.06 + 0.04 * u(p.rng);
  for (int y = 0; y < size; ++y) {
    const double fy = (y + 0.5) / size;
    for (int x = 0; x < size; ++x) {
      const double fx = (x + 0.5) / size;
      const double line = horizon + tilt * (fx - 0.5);
      if (fy < line) {
        const double d = std::hypot(fx - sun_x, fy - sun_y);
        if (sun && d < sun_r)
          p.set(y, x, 0.13 - p.hue_shift, 0.25, 1.0);
        else
          p.set(y, x, sky_h, sky_s * (0.7 + 0.3 * fy / line), 0.95 - 0.25 * fy);
      } else {
        const double tex = 0.06 * std::sin(freq * kTau * fx + phase) * std::sin(freq * 1.7 * kTau * fy);
        p.set(y, x, grd_h, grd_s, grd_v + tex - 0.15 * (fy - line));
      }
    }
  }
}

void paint_portrait(Painter& p, int size) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double bg_h = 0.08 + 0.1 * (u(p.rng) - 0.5), bg_s = 0.1 + 0.1 * u(p.rng), bg_v = 0.4 + 0.1 * u(p.rng);
  const double cx = 0.5 + 0.16 * (u(p.rng) - 0.5), cy = 0.55 + 0.16 * (u(p.rng) - 0.5);
  const double rx = 0.22 + 0.08 * u(p.rng), ry = rx * (1.2 + 0.2 * u(p.rng));
  const double skin_h = 0.055 + 0.03 * (u(p.rng) - 0.5), skin_s = 0.4 + 0.06 * u(p.rng), skin_v = 0.74 + 0.06 * u(p.rng);
  const double hair_v = 0.15 + 0.05 * u(p.rng);
  for (int y = 0; y < size; ++y) {
    const double fy = (y + 0.5) / size;
    for (int x = 0; x < size; ++x) {
      const double fx = (x + 0.5) / size;
      const double dx = (fx - cx) / rx, dy = (fy - cy) / ry;
      const double r2 = dx * dx + dy * dy;
      const double hx = (fx - cx) / (rx * 1.1), hy = (fy - (cy - 0.25 * ry)) / (ry * 0.95);
      if (r2 < 1.0) {
        p.set(y, x, skin_h, skin_s, skin_v - 0.18 * r2 + 0.05 * dy);
      } else if (hx * hx + hy * hy < 1.0 && fy < cy) {
        p.set(y, x, 0.07, 0.5, hair_v);
      } else if (fy > cy + 0.8 * ry && std::abs(fx - cx) < 1.8 * rx) {
        p.set(y, x, bg_h + 0.5, 0.3, 0.25 + 0.2 * bg_v);
      } else {
        p.set(y, x, bg_h, bg_s, bg_v + 0.15 * (0.5 - fy));
      }
    }
  }
}

void paint_architecture(Painter& p, int size) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double bg_v = 0.75 + 0.05 * u(p.rng);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) p.set(y, x, 0.62, 0.08, bg_v - 0.1 * (y + 0.5) / size);
  const int n = 3 + static_cast<int>(u(p.rng) * 3);
  for (int b = 0; b < n; ++b) {
    const double x0 = u(p.rng) * 0.8, w = 0.15 + 0.25 * u(p.rng);
    const double top = 0.1 + 0.5 * u(p.rng);
    const double v = 0.35 + 0.2 * u(p.rng), s = 0.1 + 0.15 * u(p.rng);
    const double lit = u(p.rng);
    for (int y = 0; y < size; ++y) {
      const double fy = (y + 0.5) / size;
      if (fy < top) continue;
      for (int x = 0; x < size; ++x) {
        const double fx = (x + 0.5) / size;
        if (fx < x0 || fx > x0 + w) continue;
        const bool window = std::fmod((fx - x0) * 12.0, 1.0) > 0.55 && std::fmod((fy - top) * 12.0, 1.0) > 0.5;
        if (window && lit > 0.3)
          p.set(y, x, 0.13, 0.55, 0.9);
        else
          p.set(y, x, 0.62, s, v);
      }
    }
  }
  const double sx = 0.1 + 0.6 * u(p.rng), sy = 0.3 + 0.4 * u(p.rng);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double fx = (x + 0.5) / size, fy = (y + 0.5) / size;
      if (fx > sx && fx < sx + 0.2 && fy > sy && fy < sy + 0.1) p.set(y, x, 0.86, 0.7, 0.8);
    }
}

}  // namespace

Image synth_scene(int class_id, std::uint64_t seed, int size) {
  if (class_id < 0) throw InvalidInput("synth_scene: class_id must be non-negative");
  if (size < Image::kMinSide) throw InvalidInput("synth_scene: size below minimum");
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(class_id)}));
  Painter p{Image(size, size), 0.17 * (class_id / 3), rng};
  switch (class_id % 3) {
    case 0: paint_landscape(p, size); break;
    case 1: paint_portrait(p, size); break;
    default: paint_architecture(p, size); break;
  }
  std::normal_distribution<float> noise(0.0f, 0.01f);
  for (long i = 0; i < p.img.pixels().size(); ++i) p.img.pixels().data()[i] += noise(rng);
  p.img.clamp01();
  return p.img.quantized();
}

double mean_hue(const Image& img) {
  double sx = 0.0, sy = 0.0;
  for (long i = 0; i < img.pixel_count(); ++i) {
    const Eigen::Vector3d hsv = rgb_to_hsv(img.pixels().col(i).cast<double>());
    sx += hsv(1) * std::cos(kTau * hsv(0));
    sy += hsv(1) * std::sin(kTau * hsv(0));
  }
  return wrap_hue(std::atan2(sy, sx) / kTau);
}

double hue_distance(double a, double b) {
  const double d = std::abs(wrap_hue(a) - wrap_hue(b));
  return std::min(d, 1.0 - d);
}

}  // namespace msm
