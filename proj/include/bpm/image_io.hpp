// Copyright 2026 The BPM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// PNG and base64 codecs for images and masks. Images decode to [0,1] RGB;
// mask pixels >= 128 (after grayscale conversion) are set.

#pragma once

#include <png.h>

#include <boost/beast/core/detail/base64.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bpm/errors.hpp"
#include "bpm/geometry.hpp"

namespace bpm {

namespace detail {

struct PngImage {
  png_image image{};
  PngImage() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

inline std::vector<std::uint8_t> png_decode(std::span<const std::uint8_t> bytes,
                                            std::uint32_t format, int& width,
                                            int& height) {
  PngImage png;
  if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::kIo, std::string("png decode: ") + png.image.message);
  }
  png.image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, buffer.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png decode: ") + png.image.message);
  }
  width = int(png.image.width);
  height = int(png.image.height);
  return buffer;
}

inline std::vector<std::uint8_t> png_encode(std::span<const std::uint8_t> raw,
                                            std::uint32_t format, int width,
                                            int height) {
  PngImage png;
  png.image.width = std::uint32_t(width);
  png.image.height = std::uint32_t(height);
  png.image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png.image, nullptr, &size, 0, raw.data(), 0,
                                 nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png encode: ") + png.image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png.image, out.data(), &size, 0, raw.data(),
                                 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png encode: ") + png.image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace detail

inline RasterImage decode_png_rgb(std::span<const std::uint8_t> bytes) {
  int w = 0, h = 0;
  const auto raw = detail::png_decode(bytes, PNG_FORMAT_RGB, w, h);
  RasterImage img(w, h);
  std::size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < RasterImage::kChannels; ++c)
        img.set(x, y, c, raw[i++] / 255.0);
  return img;
}

inline std::vector<std::uint8_t> encode_png_rgb(const RasterImage& img) {
  std::vector<std::uint8_t> raw;
  raw.reserve(img.values().size());
  for (double v : img.values())
    raw.push_back(std::uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return detail::png_encode(raw, PNG_FORMAT_RGB, img.width(), img.height());
}

inline BinaryMask decode_png_mask(std::span<const std::uint8_t> bytes) {
  int w = 0, h = 0;
  const auto raw = detail::png_decode(bytes, PNG_FORMAT_GRAY, w, h);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      m.set(x, y, raw[std::size_t(y) * std::size_t(w) + std::size_t(x)] >= 128);
  return m;
}

inline std::vector<std::uint8_t> encode_png_mask(const BinaryMask& m) {
  std::vector<std::uint8_t> raw;
  raw.reserve(m.size());
  for (auto b : m.bits()) raw.push_back(b ? 255 : 0);
  return detail::png_encode(raw, PNG_FORMAT_GRAY, m.width(), m.height());
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& p,
                             std::span<const std::uint8_t> bytes) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
}

inline RasterImage load_image(const std::filesystem::path& p) {
  return decode_png_rgb(read_file_bytes(p));
}

inline void save_image(const std::filesystem::path& p, const RasterImage& img) {
  write_file_bytes(p, encode_png_rgb(img));
}

inline BinaryMask load_mask(const std::filesystem::path& p) {
  return decode_png_mask(read_file_bytes(p));
}

inline void save_mask(const std::filesystem::path& p, const BinaryMask& m) {
  write_file_bytes(p, encode_png_mask(m));
}

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
  namespace b64 = boost::beast::detail::base64;
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
  namespace b64 = boost::beast::detail::base64;
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
  // The decoder stops at the first '='; only padding may follow.
  const auto rest = text.substr(read);
  if (rest.size() > 2 || rest.find_first_not_of('=') != std::string_view::npos ||
      (!rest.empty() && text.size() % 4 != 0)) {
    throw Error(ErrorKind::kSchemaViolation, "invalid base64 payload");
  }
  out.resize(written);
  return out;
}

}  // namespace bpm
