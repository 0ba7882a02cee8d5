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

// Perception protocol: how the engine obtains parses, detections, masks and
// embeddings. Implementations must be safe for concurrent calls.

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpm/errors.hpp"
#include "bpm/geometry.hpp"
#include "bpm/image_io.hpp"
#include "bpm/instruction.hpp"

namespace bpm {

struct Detection {
  BBox bbox;
  double confidence = 0.0;
  std::string label;
};

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  double norm() const noexcept {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }
};

struct ProviderCapabilities {
  int embed_dim = 512;
  bool supports_parse = true;
  bool supports_detect = true;
  bool supports_segment = true;
  bool supports_embed = true;
  std::string version;
};

inline nlohmann::json to_json(const ProviderCapabilities& c) {
  return {{"embed_dim", c.embed_dim},
          {"supports_parse", c.supports_parse},
          {"supports_detect", c.supports_detect},
          {"supports_segment", c.supports_segment},
          {"supports_embed", c.supports_embed},
          {"version", c.version}};
}

inline ProviderCapabilities capabilities_from_json(const nlohmann::json& j) {
  try {
    ProviderCapabilities c;
    c.embed_dim = j.value("embed_dim", 512);
    c.supports_parse = j.value("supports_parse", true);
    c.supports_detect = j.value("supports_detect", true);
    c.supports_segment = j.value("supports_segment", true);
    c.supports_embed = j.value("supports_embed", true);
    c.version = j.value("version", std::string{});
    if (c.supports_embed && c.embed_dim <= 0) {
      throw Error(ErrorKind::kSchemaViolation, "embed_dim");
    }
    return c;
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::kSchemaViolation, "capabilities");
  }
}

enum class ImageRole { kOrigin, kEdited };

inline constexpr std::string_view to_string(ImageRole r) {
  return r == ImageRole::kOrigin ? "origin" : "edited";
}

/// Request metadata. Remote providers ignore it; the fixture provider keys
/// its lookups on it.
struct RequestContext {
  std::string sample_id;
  ImageRole role = ImageRole::kOrigin;
  std::optional<BBox> crop_box;
};

class PerceptionProvider {
 public:
  virtual ~PerceptionProvider() = default;

  virtual ProviderCapabilities capabilities() const = 0;
  virtual ParsedInstruction parse(std::string_view instruction,
                                  const RequestContext& ctx) const = 0;
  virtual std::vector<Detection> detect(const RasterImage& image,
                                        std::string_view query,
                                        const RequestContext& ctx) const = 0;
  virtual BinaryMask segment(const RasterImage& image, const BBox& bbox,
                             const RequestContext& ctx) const = 0;
  virtual EmbeddingVector embed_image(const RasterImage& image,
                                      const RequestContext& ctx) const = 0;
  virtual EmbeddingVector embed_text(std::string_view text,
                                     const RequestContext& ctx) const = 0;
};

/// Pins the embedding dimension for one provider session and rejects vectors
/// whose norm falls outside (0, 1 + 1e-6].
class EmbeddingGuard {
 public:
  explicit EmbeddingGuard(std::size_t expected_dim = 0) : dim_(expected_dim) {}

  const EmbeddingVector& check(const EmbeddingVector& e) const {
    if (e.values.empty()) throw Error(ErrorKind::kSchemaViolation, "vector");
    for (double v : e.values)
      if (!std::isfinite(v)) throw Error(ErrorKind::kSchemaViolation, "vector");
    const double n = e.norm();
    if (!(n > 0.0) || n > 1.0 + 1e-6) {
      throw Error(ErrorKind::kSchemaViolation, "vector");
    }
    std::size_t expected = 0;
    if (!dim_.compare_exchange_strong(expected, e.dim()) && expected != e.dim()) {
      throw Error(ErrorKind::kSchemaViolation,
                  "vector: dimension " + std::to_string(e.dim()) +
                      " differs from session dimension " +
                      std::to_string(expected));
    }
    return e;
  }

  std::size_t dim() const noexcept { return dim_.load(); }

 private:
  mutable std::atomic<std::size_t> dim_;
};

inline std::string quantized_box_key(const BBox& b) {
  return std::to_string(std::lround(b.x0())) + "," +
         std::to_string(std::lround(b.y0())) + "," +
         std::to_string(std::lround(b.x1())) + "," +
         std::to_string(std::lround(b.y1()));
}

inline BBox bbox_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(ErrorKind::kSchemaViolation, "bbox");
  }
  for (const auto& v : j)
    if (!v.is_number()) throw Error(ErrorKind::kSchemaViolation, "bbox");
  try {
    return BBox::make(j[0].get<double>(), j[1].get<double>(),
                      j[2].get<double>(), j[3].get<double>());
  } catch (const Error&) {
    throw Error(ErrorKind::kSchemaViolation, "bbox");
  }
}

inline nlohmann::json to_json(const BBox& b) {
  return nlohmann::json::array({b.x0(), b.y0(), b.x1(), b.y1()});
}

inline Detection detection_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("bbox") || !j.contains("confidence")) {
    throw Error(ErrorKind::kSchemaViolation, "detections");
  }
  Detection d;
  d.bbox = bbox_from_json(j.at("bbox"));
  if (!j.at("confidence").is_number()) {
    throw Error(ErrorKind::kSchemaViolation, "confidence");
  }
  d.confidence = j.at("confidence").get<double>();
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
    throw Error(ErrorKind::kSchemaViolation, "confidence");
  }
  if (j.contains("label")) {
    if (!j.at("label").is_string()) throw Error(ErrorKind::kSchemaViolation, "label");
    d.label = j.at("label").get<std::string>();
  }
  return d;
}

inline EmbeddingVector embedding_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorKind::kSchemaViolation, "vector");
  EmbeddingVector e;
  e.values.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorKind::kSchemaViolation, "vector");
    e.values.push_back(v.get<double>());
  }
  return e;
}

/// File-backed provider. Layout under the root directory:
///
///   capabilities.json            optional
///   embeddings.json              optional, {"text": {...}} shared by all samples
///   <sample_id>/parse.json
///   <sample_id>/detections.json  {"origin": {query: [det...]}, "edited": {...}}
///                                each det may carry "mask": n, naming
///                                mask_<role>_<n>.png
///   <sample_id>/embeddings.json  {"text": {phrase: vec},
///                                 "crop": {"<role>:x0,y0,x1,y1": vec, "<role>": vec}}
///
/// All JSON is read at construction; the provider is read-only afterwards.
class FixtureProvider final : public PerceptionProvider {
 public:
  explicit FixtureProvider(std::filesystem::path root) : root_(std::move(root)) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root_)) {
      throw Error(ErrorKind::kProviderUnavailable,
                  "fixture directory not found: " + root_.string());
    }
    if (fs::exists(root_ / "capabilities.json")) {
      caps_ = capabilities_from_json(read_json(root_ / "capabilities.json"));
    }
    if (caps_.version.empty()) caps_.version = "fixtures";
    guard_ = std::make_unique<EmbeddingGuard>(
        caps_.supports_embed ? std::size_t(caps_.embed_dim) : 0);
    if (fs::exists(root_ / "embeddings.json")) {
      shared_ = load_embeddings(read_json(root_ / "embeddings.json"));
    }
    for (const auto& entry : fs::directory_iterator(root_)) {
      if (!entry.is_directory()) continue;
      Sample s;
      const auto dir = entry.path();
      if (fs::exists(dir / "parse.json")) s.parse = read_json(dir / "parse.json");
      if (fs::exists(dir / "detections.json")) {
        s.detections = read_json(dir / "detections.json");
      }
      if (fs::exists(dir / "embeddings.json")) {
        s.embeddings = load_embeddings(read_json(dir / "embeddings.json"));
      }
      samples_.emplace(dir.filename().string(), std::move(s));
    }
  }

  ProviderCapabilities capabilities() const override { return caps_; }

  ParsedInstruction parse(std::string_view, const RequestContext& ctx) const override {
    const auto& s = sample(ctx);
    if (!s.parse) miss(ctx, "parse.json");
    return validate_parse_response(*s.parse);
  }

  std::vector<Detection> detect(const RasterImage&, std::string_view query,
                                const RequestContext& ctx) const override {
    std::vector<Detection> out;
    for (const auto& d : detection_list(ctx, query)) out.push_back(detection_from_json(d));
    return out;
  }

  BinaryMask segment(const RasterImage& image, const BBox& bbox,
                     const RequestContext& ctx) const override {
    const auto& s = sample(ctx);
    const std::string role(to_string(ctx.role));
    const std::string key = quantized_box_key(bbox);
    if (s.detections && s.detections->contains(role)) {
      for (const auto& [query, dets] : s.detections->at(role).items()) {
        for (const auto& d : dets) {
          if (!d.contains("mask")) continue;
          if (quantized_box_key(bbox_from_json(d.at("bbox"))) != key) continue;
          const auto path = root_ / ctx.sample_id /
                            ("mask_" + role + "_" +
                             std::to_string(d.at("mask").get<int>()) + ".png");
          if (!std::filesystem::exists(path)) miss(ctx, path.filename().string());
          return resize_nearest(load_mask(path), image.dims());
        }
      }
    }
    miss(ctx, "mask for " + role + " box " + key);
  }

  EmbeddingVector embed_image(const RasterImage&, const RequestContext& ctx) const override {
    const auto& s = sample(ctx);
    const std::string role(to_string(ctx.role));
    if (ctx.crop_box) {
      if (auto it = s.embeddings.crop.find(role + ":" + quantized_box_key(*ctx.crop_box));
          it != s.embeddings.crop.end()) {
        return guard_->check(it->second);
      }
    }
    if (auto it = s.embeddings.crop.find(role); it != s.embeddings.crop.end()) {
      return guard_->check(it->second);
    }
    miss(ctx, "crop embedding " + role +
                  (ctx.crop_box ? ":" + quantized_box_key(*ctx.crop_box) : ""));
  }

  EmbeddingVector embed_text(std::string_view text, const RequestContext& ctx) const override {
    const std::string key(text);
    if (auto sit = samples_.find(ctx.sample_id); sit != samples_.end()) {
      if (auto it = sit->second.embeddings.text.find(key);
          it != sit->second.embeddings.text.end()) {
        return guard_->check(it->second);
      }
    }
    if (auto it = shared_.text.find(key); it != shared_.text.end()) {
      return guard_->check(it->second);
    }
    miss(ctx, "text embedding '" + key + "'");
  }

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  struct Embeddings {
    std::map<std::string, EmbeddingVector> text;
    std::map<std::string, EmbeddingVector> crop;
  };
  struct Sample {
    std::optional<nlohmann::json> parse;
    std::optional<nlohmann::json> detections;
    Embeddings embeddings;
  };

  static nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorKind::kIo, "cannot open " + p.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorKind::kSchemaViolation, "malformed JSON in " + p.string());
    }
    return j;
  }

  static Embeddings load_embeddings(const nlohmann::json& j) {
    Embeddings e;
    if (j.contains("text"))
      for (const auto& [k, v] : j.at("text").items()) e.text[k] = embedding_from_json(v);
    if (j.contains("crop"))
      for (const auto& [k, v] : j.at("crop").items()) e.crop[k] = embedding_from_json(v);
    return e;
  }

  [[noreturn]] static void miss(const RequestContext& ctx, const std::string& what) {
    throw Error(ErrorKind::kFixtureMiss, ctx.sample_id + ": " + what);
  }

  const Sample& sample(const RequestContext& ctx) const {
    auto it = samples_.find(ctx.sample_id);
    if (it == samples_.end()) miss(ctx, "no fixture directory");
    return it->second;
  }

  const nlohmann::json& detection_list(const RequestContext& ctx,
                                       std::string_view query) const {
    const auto& s = sample(ctx);
    const std::string role(to_string(ctx.role));
    const std::string q(query);
    if (!s.detections || !s.detections->contains(role) ||
        !s.detections->at(role).contains(q)) {
      miss(ctx, "detections for (" + role + ", '" + q + "')");
    }
    return s.detections->at(role).at(q);
  }

  std::filesystem::path root_;
  ProviderCapabilities caps_;
  std::unique_ptr<EmbeddingGuard> guard_;
  Embeddings shared_;
  std::map<std::string, Sample> samples_;
};

}  // namespace bpm
