#include "msm/imaging/png_io.hpp"

#include "msm/errors.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace msm {

namespace {

Image from_rgb8(const std::vector<std::uint8_t>& buf, int height, int width) {
  Image img(height, width);
  for (long i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) img.pixels()(c, i) = static_cast<float>(buf[static_cast<std::size_t>(i * 3 + c)]) / 255.0f;
  return img;
}

std::vector<std::uint8_t> to_rgb8(const Image& img) {
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(img.pixel_count() * 3));
  for (long i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c)
      buf[static_cast<std::size_t>(i * 3 + c)] =
          static_cast<std::uint8_t>(std::lround(std::clamp(img.pixels()(c, i), 0.0f, 1.0f) * 255.0f));
  return buf;
}

}  // namespace

Image decode_png(std::string_view bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw DecodeError(std::string("png decode failed: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DecodeError(std::string("png decode failed: ") + image.message);
  }
  const int h = static_cast<int>(image.height), w = static_cast<int>(image.width);
  if (h < Image::kMinSide || w < Image::kMinSide) throw DecodeError("png decode failed: image smaller than 8x8");
  return from_rgb8(buf, h, w);
}

std::string encode_png(const Image& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  const auto buf = to_rgb8(img);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, buf.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode failed: ") + image.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, buf.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode failed: ") + image.message);
  out.resize(size);
  return out;
}

Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_png(ss.str());
}

void write_png(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::string bytes = encode_png(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) clean.push_back(ch);
  if (clean.size() % 4 != 0) throw DecodeError("base64: length is not a multiple of 4");
  std::string out(3 * clean.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) throw DecodeError("base64: invalid character");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace msm
