// Copyright 2026 The chartcf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartcf {

std::string base64_encode(std::string_view bytes);
std::string sha256_hex(std::string_view bytes);

// "image/png" or "image/jpeg" from the magic bytes, nullopt otherwise.
std::optional<std::string> detect_image_mime(std::string_view bytes);

struct RgbaImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 4
};

RgbaImage read_png(const std::filesystem::path& file);
void write_png(const std::filesystem::path& file, const RgbaImage& image);

// SHA-256 over decoded RGBA pixels plus dimensions for PNGs; over the raw
// file bytes for any other format.
std::string pixel_digest(const std::filesystem::path& file);

}  // namespace chartcf
