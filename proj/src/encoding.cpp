// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#include "chartcf/encoding.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <cstring>

#include "chartcf/error.hpp"
#include "chartcf/jsonl.hpp"

namespace chartcf {

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::optional<std::string> detect_image_mime(std::string_view bytes) {
  static constexpr unsigned char kPng[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= sizeof(kPng) &&
      std::memcmp(bytes.data(), kPng, sizeof(kPng)) == 0) {
    return "image/png";
  }
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8 &&
      static_cast<unsigned char>(bytes[2]) == 0xFF) {
    return "image/jpeg";
  }
  return std::nullopt;
}

RgbaImage read_png(const std::filesystem::path& file) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, file.c_str())) {
    throw Error(ErrorCode::kInvalidImage, file.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  RgbaImage out;
  out.width = image.width;
  out.height = image.height;
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kInvalidImage, file.string() + ": " + message);
  }
  return out;
}

void write_png(const std::filesystem::path& file, const RgbaImage& img) {
  if (img.pixels.size() != std::size_t{img.width} * img.height * 4) {
    throw Error(ErrorCode::kInvalidArgument, "pixel buffer size mismatch");
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = img.width;
  image.height = img.height;
  image.format = PNG_FORMAT_RGBA;
  if (!png_image_write_to_file(&image, file.c_str(), 0, img.pixels.data(), 0,
                               nullptr)) {
    throw Error(ErrorCode::kIoError, file.string() + ": " + image.message);
  }
}

std::string pixel_digest(const std::filesystem::path& file) {
  const std::string bytes = read_text_file(file);
  if (detect_image_mime(bytes) != std::optional<std::string>("image/png")) {
    return sha256_hex(bytes);
  }
  const RgbaImage img = read_png(file);
  std::string buffer = std::to_string(img.width) + "x" +
                       std::to_string(img.height) + ":";
  buffer.append(reinterpret_cast<const char*>(img.pixels.data()),
                img.pixels.size());
  return sha256_hex(buffer);
}

}  // namespace chartcf
