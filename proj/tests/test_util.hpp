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

// Shared generators and helpers for the test suite.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <map>
#include <utility>

#include "bpm/geometry.hpp"
#include "bpm/provider.hpp"

namespace bpm::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform() < p; }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::vector<double> vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  std::vector<double> unit_vec(std::size_t n) {
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) {
      x = normal();
      s += x * x;
    }
    for (auto& x : v) x /= std::sqrt(s);
    return v;
  }

  // Box with positive extent inside [0,w]x[0,h].
  BBox box(double w, double h) {
    const double x0 = uniform(0.0, w - 1.0), y0 = uniform(0.0, h - 1.0);
    return BBox::make(x0, y0, uniform(x0 + 0.5, w), uniform(y0 + 0.5, h));
  }
  BBox int_box(int w, int h) {
    const int x0 = integer(0, w - 1), y0 = integer(0, h - 1);
    return BBox::make(x0, y0, integer(x0 + 1, w), integer(y0 + 1, h));
  }
  RasterImage image(int w, int h) {
    RasterImage img(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) img.set(x, y, c, uniform());
    return img;
  }
  BinaryMask mask(int w, int h, double p = 0.5) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) m.set(x, y, coin(p));
    return m;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline std::filesystem::path fixtures_dir() { return BPM_FIXTURES_DIR; }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bpm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// In-memory provider answering from maps; one instance serves one sample.
class ScriptedProvider final : public PerceptionProvider {
 public:
  ProviderCapabilities caps;
  std::optional<ParsedInstruction> parsed;
  std::map<std::pair<ImageRole, std::string>, std::vector<Detection>> detections;
  std::map<std::pair<ImageRole, std::string>, BinaryMask> masks;  // keyed by box key
  std::map<std::pair<ImageRole, std::string>, EmbeddingVector> crops;
  std::map<std::string, EmbeddingVector> text;
  mutable int detect_calls = 0;

  ProviderCapabilities capabilities() const override { return caps; }
  ParsedInstruction parse(std::string_view, const RequestContext&) const override {
    if (!parsed) throw Error(ErrorKind::kFixtureMiss, "parse");
    return *parsed;
  }
  std::vector<Detection> detect(const RasterImage&, std::string_view q,
                                const RequestContext& ctx) const override {
    ++detect_calls;
    auto it = detections.find({ctx.role, std::string(q)});
    return it == detections.end() ? std::vector<Detection>{} : it->second;
  }
  BinaryMask segment(const RasterImage& img, const BBox& b,
                     const RequestContext& ctx) const override {
    auto it = masks.find({ctx.role, quantized_box_key(b)});
    if (it != masks.end()) return it->second;
    BinaryMask m(img.width(), img.height());
    m.fill_box(b);
    return m;
  }
  EmbeddingVector embed_image(const RasterImage&, const RequestContext& ctx) const override {
    auto it = crops.find({ctx.role, ctx.crop_box ? quantized_box_key(*ctx.crop_box) : ""});
    if (it == crops.end()) throw Error(ErrorKind::kFixtureMiss, "crop");
    return it->second;
  }
  EmbeddingVector embed_text(std::string_view t, const RequestContext&) const override {
    auto it = text.find(std::string(t));
    if (it == text.end()) throw Error(ErrorKind::kFixtureMiss, "text");
    return it->second;
  }

  void add_detection(ImageRole role, const std::string& q, const BBox& b, double conf,
                     std::optional<BinaryMask> mask = std::nullopt) {
    detections[{role, q}].push_back({b, conf, q});
    if (mask) masks[{role, quantized_box_key(b)}] = *mask;
  }
};

}  // namespace bpm::testing
