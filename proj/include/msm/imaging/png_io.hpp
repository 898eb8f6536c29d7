#pragma once

#include "msm/imaging/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace msm {

// 8-bit sRGB PNG. Values map to floats as byte/255 and back with rounding.

Image read_png(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);

/// Throws DecodeError on malformed data.
Image decode_png(std::string_view bytes);
std::string encode_png(const Image& img);

std::string base64_encode(std::string_view bytes);
/// Throws DecodeError on invalid input.
std::string base64_decode(std::string_view text);

}  // namespace msm
