#pragma once

#include <Eigen/Dense>

namespace msm {

/// RGB image with float channels in [0, 1] (sRGB encoded).
///
/// Pixels are stored as a 3 x (height*width) matrix, one column per pixel in
/// row-major order. This is the same layout the networks consume, so turning
/// an image into a feature map is a cast.
class Image {
 public:
  using Pixels = Eigen::Matrix<float, 3, Eigen::Dynamic>;
  static constexpr int kMinSide = 8;

  Image() = default;
  /// Black image. Throws InvalidInput when either side is below kMinSide.
  Image(int height, int width);
  Image(int height, int width, Pixels pixels);

  static Image uniform(int height, int width, float r, float g, float b);
  static Image uniform(int height, int width, float v) { return uniform(height, width, v, v, v); }

  int height() const { return height_; }
  int width() const { return width_; }
  long pixel_count() const { return static_cast<long>(height_) * width_; }
  bool empty() const { return height_ == 0; }

  const Pixels& pixels() const { return pixels_; }
  Pixels& pixels() { return pixels_; }

  float& at(int y, int x, int c) { return pixels_(c, static_cast<long>(y) * width_ + x); }
  float at(int y, int x, int c) const { return pixels_(c, static_cast<long>(y) * width_ + x); }

  bool same_size(const Image& other) const { return height_ == other.height_ && width_ == other.width_; }

  /// Clamps every channel into [0, 1].
  Image& clamp01();

  bool operator==(const Image& other) const {
    return same_size(other) && pixels_ == other.pixels_;
  }

  /// Returns a copy rounded to the 8-bit grid (value = round(v*255)/255).
  Image quantized() const;

  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> as_tensor() const {
    return pixels_.template cast<Scalar>();
  }

 private:
  int height_ = 0;
  int width_ = 0;
  Pixels pixels_;
};

/// Area-weighted resampling; exact box averaging for integer downscale factors.
Image resize(const Image& img, int height, int width);

/// Returns img unchanged when already square of the given side, otherwise resized.
Image fit_square(const Image& img, int side);

void require_same_size(const Image& a, const Image& b, const char* what);

}  // namespace msm
