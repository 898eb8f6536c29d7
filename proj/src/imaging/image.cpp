#include "msm/imaging/image.hpp"

#include "msm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace msm {

Image::Image(int height, int width) : height_(height), width_(width) {
  if (height < kMinSide || width < kMinSide)
    throw InvalidInput("image must be at least " + std::to_string(kMinSide) + "x" + std::to_string(kMinSide) +
                       ", got " + std::to_string(height) + "x" + std::to_string(width));
  pixels_ = Pixels::Zero(3, pixel_count());
}

Image::Image(int height, int width, Pixels pixels) : Image(height, width) {
  if (pixels.cols() != pixel_count()) throw DimensionMismatch("pixel buffer does not match image size");
  pixels_ = std::move(pixels);
}

Image Image::uniform(int height, int width, float r, float g, float b) {
  Image img(height, width);
  img.pixels_.row(0).setConstant(r);
  img.pixels_.row(1).setConstant(g);
  img.pixels_.row(2).setConstant(b);
  return img;
}

Image& Image::clamp01() {
  pixels_ = pixels_.cwiseMax(0.0f).cwiseMin(1.0f);
  return *this;
}

Image Image::quantized() const {
  Image out = *this;
  out.pixels_ = pixels_.unaryExpr([](float v) { return std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f; });
  return out;
}

namespace {

// Weights mapping n_in source cells onto n_out destination cells by overlap area.
struct Tap {
  int src;
  float weight;
};

std::vector<std::vector<Tap>> area_taps(int n_in, int n_out) {
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(n_out));
  const double scale = static_cast<double>(n_in) / n_out;
  for (int o = 0; o < n_out; ++o) {
    const double lo = o * scale, hi = (o + 1) * scale;
    double total = 0.0;
    for (int s = static_cast<int>(std::floor(lo)); s < std::min(n_in, static_cast<int>(std::ceil(hi))); ++s) {
      const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
      if (overlap <= 0) continue;
      taps[static_cast<std::size_t>(o)].push_back({s, static_cast<float>(overlap)});
      total += overlap;
    }
    for (auto& t : taps[static_cast<std::size_t>(o)]) t.weight = static_cast<float>(t.weight / total);
  }
  return taps;
}

}  // namespace

Image resize(const Image& img, int height, int width) {
  if (img.height() == height && img.width() == width) return img;
  const auto ty = area_taps(img.height(), height);
  const auto tx = area_taps(img.width(), width);
  // Horizontal pass into a height_in x width_out buffer, then vertical.
  Image::Pixels tmp = Image::Pixels::Zero(3, static_cast<long>(img.height()) * width);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < width; ++x)
      for (const auto& t : tx[static_cast<std::size_t>(x)])
        tmp.col(static_cast<long>(y) * width + x) += t.weight * img.pixels().col(static_cast<long>(y) * img.width() + t.src);
  Image out(height, width);
  for (int y = 0; y < height; ++y)
    for (const auto& t : ty[static_cast<std::size_t>(y)])
      for (int x = 0; x < width; ++x)
        out.pixels().col(static_cast<long>(y) * width + x) += t.weight * tmp.col(static_cast<long>(t.src) * width + x);
  return out.clamp01();
}

Image fit_square(const Image& img, int side) { return resize(img, side, side); }

void require_same_size(const Image& a, const Image& b, const char* what) {
  if (!a.same_size(b))
    throw DimensionMismatch(std::string(what) + ": image sizes differ (" + std::to_string(a.height()) + "x" +
                            std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                            std::to_string(b.width()) + ")");
}

}  // namespace msm
