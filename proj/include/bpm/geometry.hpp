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

// Pixel-space primitives shared by the localizer and both judges.
//
// Coordinates follow the continuous pixel-edge convention: pixel (i, j)
// covers [i, i+1) x [j, j+1), so a box (x0, y0, x1, y1) has area
// (x1 - x0) * (y1 - y0) and IoU is computed exactly without rasterizing.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bpm/errors.hpp"

namespace bpm {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct ImageDims {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

class BBox {
 public:
  BBox() = default;

  static BBox make(double x0, double y0, double x1, double y1) {
    if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(x1) ||
        !std::isfinite(y1) || !(x0 < x1) || !(y0 < y1)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "invalid box (" + std::to_string(x0) + "," +
                      std::to_string(y0) + "," + std::to_string(x1) + "," +
                      std::to_string(y1) + ")");
    }
    BBox b;
    b.x0_ = x0;
    b.y0_ = y0;
    b.x1_ = x1;
    b.y1_ = y1;
    return b;
  }

  static BBox full_image(ImageDims dims) {
    return make(0.0, 0.0, dims.width, dims.height);
  }

  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  double x1() const noexcept { return x1_; }
  double y1() const noexcept { return y1_; }
  double width() const noexcept { return x1_ - x0_; }
  double height() const noexcept { return y1_ - y0_; }
  double area() const noexcept { return width() * height(); }

  BBox translated(double dx, double dy) const {
    return make(x0_ + dx, y0_ + dy, x1_ + dx, y1_ + dy);
  }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x0_ = 0.0;
  double y0_ = 0.0;
  double x1_ = 1.0;
  double y1_ = 1.0;
};

inline double bbox_iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline Point2 bbox_center(const BBox& b) noexcept {
  return {0.5 * (b.x0() + b.x1()), 0.5 * (b.y0() + b.y1())};
}

/// Clamps a box to the image rectangle. Returns nullopt when nothing of
/// positive area is left.
inline std::optional<BBox> clamp_to_image(const BBox& b, ImageDims dims) {
  const double x0 = std::clamp(b.x0(), 0.0, double(dims.width));
  const double y0 = std::clamp(b.y0(), 0.0, double(dims.height));
  const double x1 = std::clamp(b.x1(), 0.0, double(dims.width));
  const double y1 = std::clamp(b.y1(), 0.0, double(dims.height));
  if (!(x0 < x1) || !(y0 < y1)) return std::nullopt;
  return BBox::make(x0, y0, x1, y1);
}

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool value = false)
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorKind::kInvalidArgument, "mask dimensions must be > 0");
    }
    bits_.assign(std::size_t(width) * std::size_t(height), value ? 1 : 0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  ImageDims dims() const noexcept { return {width_, height_}; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { bits_[index(x, y)] = v ? 1 : 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  void fill_box(const BBox& b) {
    const int xa = std::max(0, int(std::floor(b.x0())));
    const int ya = std::max(0, int(std::floor(b.y0())));
    const int xb = std::min(width_, int(std::ceil(b.x1())));
    const int yb = std::min(height_, int(std::ceil(b.y1())));
    for (int y = ya; y < yb; ++y)
      for (int x = xa; x < xb; ++x) set(x, y, true);
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return std::size_t(y) * std::size_t(width_) + std::size_t(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

inline std::int64_t mask_area(const BinaryMask& m) noexcept {
  std::int64_t n = 0;
  for (auto b : m.bits()) n += b;
  return n;
}

inline BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  if (a.dims() != b.dims()) {
    throw Error(ErrorKind::kDimensionMismatch, "mask_union: mask sizes differ");
  }
  BinaryMask out(a.width(), a.height());
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) out.set(x, y, a.at(x, y) || b.at(x, y));
  return out;
}

/// Nearest-neighbour resampling keeps the raster binary.
inline BinaryMask resize_nearest(const BinaryMask& m, ImageDims dims) {
  if (m.dims() == dims) return m;
  BinaryMask out(dims.width, dims.height);
  for (int y = 0; y < dims.height; ++y) {
    const int sy = std::min(m.height() - 1,
                            int((y + 0.5) * m.height() / dims.height));
    for (int x = 0; x < dims.width; ++x) {
      const int sx = std::min(m.width() - 1,
                              int((x + 0.5) * m.width() / dims.width));
      out.set(x, y, m.at(sx, sy));
    }
  }
  return out;
}

/// RGB raster with values in [0, 1], interleaved row-major.
class RasterImage {
 public:
  static constexpr int kChannels = 3;

  RasterImage() = default;
  RasterImage(int width, int height, double fill = 0.0)
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorKind::kInvalidArgument, "image dimensions must be > 0");
    }
    values_.assign(std::size_t(width) * std::size_t(height) * kChannels,
                   std::clamp(fill, 0.0, 1.0));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  ImageDims dims() const noexcept { return {width_, height_}; }

  double at(int x, int y, int c) const { return values_[index(x, y, c)]; }
  void set(int x, int y, int c, double v) {
    values_[index(x, y, c)] = std::clamp(v, 0.0, 1.0);
  }

  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (std::size_t(y) * std::size_t(width_) + std::size_t(x)) * kChannels +
           std::size_t(c);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Integer pixel span covered by a box: edges are rounded outward so that
/// every partially covered pixel is kept.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

inline PixelRect pixel_rect(const BBox& b, ImageDims dims) {
  const auto clamped = clamp_to_image(b, dims);
  if (!clamped) throw Error(ErrorKind::kEmptyCrop, "box lies outside the image");
  PixelRect r{int(std::floor(clamped->x0())), int(std::floor(clamped->y0())),
              int(std::ceil(clamped->x1())), int(std::ceil(clamped->y1()))};
  r.x1 = std::min(r.x1, dims.width);
  r.y1 = std::min(r.y1, dims.height);
  if (r.x1 <= r.x0 || r.y1 <= r.y0) {
    throw Error(ErrorKind::kEmptyCrop, "clamped box is degenerate");
  }
  return r;
}

inline RasterImage crop_by_bbox(const RasterImage& img, const BBox& b) {
  const PixelRect r = pixel_rect(b, img.dims());
  RasterImage out(r.x1 - r.x0, r.y1 - r.y0);
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x)
      for (int c = 0; c < RasterImage::kChannels; ++c)
        out.set(x - r.x0, y - r.y0, c, img.at(x, y, c));
  return out;
}

/// Zeroes every pixel covered by `m`.
inline RasterImage apply_exclusion_mask(const RasterImage& img,
                                        const BinaryMask& m) {
  if (img.dims() != m.dims()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "apply_exclusion_mask: mask and image sizes differ");
  }
  RasterImage out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (m.at(x, y))
        for (int c = 0; c < RasterImage::kChannels; ++c) out.set(x, y, c, 0.0);
  return out;
}

inline RasterImage add_gaussian_noise(const RasterImage& img, double sigma,
                                      std::uint64_t seed) {
  if (!(sigma >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "sigma must be >= 0");
  }
  if (sigma == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  RasterImage out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < RasterImage::kChannels; ++c)
        out.set(x, y, c, img.at(x, y, c) + noise(rng));
  return out;
}

/// Bilinear resampling with pixel-centre alignment.
inline RasterImage resize_bilinear(const RasterImage& img, ImageDims dims) {
  if (img.dims() == dims) return img;
  RasterImage out(dims.width, dims.height);
  const double sx = double(img.width()) / dims.width;
  const double sy = double(img.height()) / dims.height;
  for (int y = 0; y < dims.height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = int(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < dims.width; ++x) {
      const double fx =
          std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = int(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < RasterImage::kChannels; ++c) {
        const double top = img.at(x0, y0, c) * (1 - wx) + img.at(x1, y0, c) * wx;
        const double bot = img.at(x0, y1, c) * (1 - wx) + img.at(x1, y1, c) * wx;
        out.set(x, y, c, top * (1 - wy) + bot * wy);
      }
    }
  }
  return out;
}

}  // namespace bpm
