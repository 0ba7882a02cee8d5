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

// Client for a perception sidecar speaking the /v1 JSON protocol.

#pragma once

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "bpm/errors.hpp"
#include "bpm/image_io.hpp"
#include "bpm/provider.hpp"

namespace bpm {

struct HttpProviderOptions {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  std::optional<std::string> bearer_token;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::milliseconds request_timeout{10000};
  // Upper bound on the wall time of one logical call, retries included.
  std::chrono::milliseconds deadline{30000};
};

inline constexpr std::string_view kProviderUrlEnv = "BPM_PROVIDER_URL";

class HttpProvider final : public PerceptionProvider {
 public:
  static constexpr std::ptrdiff_t kMaxConnections = 8;

  explicit HttpProvider(HttpProviderOptions options)
      : options_(std::move(options)) {
    if (options_.base_url.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "empty provider URL");
    }
    while (options_.base_url.ends_with('/')) options_.base_url.pop_back();
  }

  ProviderCapabilities capabilities() const override {
    std::lock_guard lock(caps_mutex_);
    if (!caps_) {
      caps_ = capabilities_from_json(call("GET", "/v1/capabilities", nullptr));
      if (caps_->supports_embed) guard_.emplace(std::size_t(caps_->embed_dim));
    }
    return *caps_;
  }

  ParsedInstruction parse(std::string_view instruction,
                          const RequestContext&) const override {
    return validate_parse_response(
        call("POST", "/v1/parse", {{"instruction", std::string(instruction)}}));
  }

  std::vector<Detection> detect(const RasterImage& image, std::string_view query,
                                const RequestContext&) const override {
    const auto r = call("POST", "/v1/detect",
                        {{"image_png_b64", base64_encode(encode_png_rgb(image))},
                         {"query", std::string(query)}});
    if (!r.contains("detections") || !r.at("detections").is_array()) {
      throw Error(ErrorKind::kSchemaViolation, "detections");
    }
    std::vector<Detection> out;
    for (const auto& d : r.at("detections")) out.push_back(detection_from_json(d));
    return out;
  }

  BinaryMask segment(const RasterImage& image, const BBox& bbox,
                     const RequestContext&) const override {
    const auto r = call("POST", "/v1/segment",
                        {{"image_png_b64", base64_encode(encode_png_rgb(image))},
                         {"bbox", to_json(bbox)}});
    if (!r.contains("mask_png_b64") || !r.at("mask_png_b64").is_string()) {
      throw Error(ErrorKind::kSchemaViolation, "mask_png_b64");
    }
    return resize_nearest(
        decode_png_mask(base64_decode(r.at("mask_png_b64").get<std::string>())),
        image.dims());
  }

  EmbeddingVector embed_image(const RasterImage& image,
                              const RequestContext&) const override {
    return checked_vector(call(
        "POST", "/v1/embed/image",
        {{"image_png_b64", base64_encode(encode_png_rgb(image))}}));
  }

  EmbeddingVector embed_text(std::string_view text,
                             const RequestContext&) const override {
    return checked_vector(
        call("POST", "/v1/embed/text", {{"text", std::string(text)}}));
  }

  const HttpProviderOptions& options() const noexcept { return options_; }

 private:
  EmbeddingVector checked_vector(const nlohmann::json& r) const {
    if (!r.contains("vector")) throw Error(ErrorKind::kSchemaViolation, "vector");
    capabilities();
    auto e = embedding_from_json(r.at("vector"));
    if (guard_) guard_->check(e);
    else EmbeddingGuard().check(e);
    return e;
  }

  nlohmann::json call(const std::string& method, const std::string& path,
                      const nlohmann::json& body) const {
    using Clock = std::chrono::steady_clock;
    const auto deadline = Clock::now() + options_.deadline;
    auto backoff = options_.initial_backoff;
    std::string last_error = "no attempt made";

    slots_.acquire();
    struct Release {
      std::counting_semaphore<kMaxConnections>& s;
      ~Release() { s.release(); }
    } release{slots_};

    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (remaining.count() <= 0) break;
      const auto timeout = std::min(remaining, options_.request_timeout);

      httplib::Client client(options_.base_url);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      if (options_.bearer_token) client.set_bearer_token_auth(*options_.bearer_token);

      auto res = method == "GET"
                     ? client.Get(path)
                     : client.Post(path, body.dump(), "application/json");
      if (res) {
        if (res->status >= 200 && res->status < 300) {
          auto j = nlohmann::json::parse(res->body, nullptr, false);
          if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorKind::kSchemaViolation, path + ": response is not a JSON object");
          }
          return j;
        }
        if (res->status < 500) {
          throw Error(ErrorKind::kSchemaViolation,
                      path + ": HTTP " + std::to_string(res->status));
        }
        last_error = "HTTP " + std::to_string(res->status);
      } else {
        last_error = httplib::to_string(res.error());
      }
      if (attempt == options_.max_retries || Clock::now() + backoff >= deadline) break;
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    throw Error(ErrorKind::kProviderUnavailable,
                options_.base_url + path + ": " + last_error);
  }

  HttpProviderOptions options_;
  mutable std::counting_semaphore<kMaxConnections> slots_{kMaxConnections};
  mutable std::mutex caps_mutex_;
  mutable std::optional<ProviderCapabilities> caps_;
  mutable std::optional<EmbeddingGuard> guard_;
};

}  // namespace bpm
