#pragma once

#include <Eigen/Core>

namespace msm {

/// CIE 1976 L*a*b* under the D65 white point, from gamma-encoded sRGB in [0, 1].
Eigen::Vector3d srgb_to_lab(const Eigen::Vector3d& rgb);

/// Inverse of srgb_to_lab (unclamped).
Eigen::Vector3d lab_to_srgb(const Eigen::Vector3d& lab);

/// HSV with hue in [0, 1).
Eigen::Vector3d rgb_to_hsv(const Eigen::Vector3d& rgb);
Eigen::Vector3d hsv_to_rgb(const Eigen::Vector3d& hsv);

/// Rec. 709 luma weights applied to the encoded values.
inline constexpr double kLumaR = 0.2126;
inline constexpr double kLumaG = 0.7152;
inline constexpr double kLumaB = 0.0722;

}  // namespace msm
