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

// Engine configuration. Precedence, lowest first: built-in defaults,
// BPM_PROVIDER_URL, the JSON config file, command-line flags.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "bpm/errors.hpp"
#include "bpm/http_provider.hpp"
#include "bpm/provider.hpp"
#include "bpm/scoring.hpp"

namespace bpm {

enum class ProviderKind { kFixtures, kHttp };

struct ProviderSpec {
  ProviderKind kind = ProviderKind::kFixtures;
  std::string locator;

  std::string str() const {
    return kind == ProviderKind::kFixtures ? "fixtures:" + locator : locator;
  }
};

/// Accepts "fixtures:<dir>", "http://host:port" or "https://...".
inline ProviderSpec parse_provider_spec(std::string_view text) {
  if (text.starts_with("fixtures:")) {
    return {ProviderKind::kFixtures, std::string(text.substr(9))};
  }
  if (text.starts_with("http://") || text.starts_with("https://")) {
    return {ProviderKind::kHttp, std::string(text)};
  }
  throw Error(ErrorKind::kInvalidArgument,
              "provider must be fixtures:<dir> or an http(s) URL, got '" +
                  std::string(text) + "'");
}

struct EngineConfig {
  EvaluationConfig eval;
  std::optional<ProviderSpec> provider;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  int http_max_retries = 3;
  int http_timeout_ms = 10000;
  int http_deadline_ms = 30000;
  std::optional<std::string> bearer_token;

  void validate() const {
    eval.judge.validate();
    if (!(eval.alpha >= 0.0 && eval.alpha <= 1.0)) {
      throw Error(ErrorKind::kAlphaOutOfRange, "alpha must lie in [0,1]");
    }
    if (!(eval.localizer.det_floor >= 0.0 && eval.localizer.det_floor <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "det_floor must lie in [0,1]");
    }
    if (jobs == 0) throw Error(ErrorKind::kInvalidArgument, "jobs must be >= 1");
    if (http_max_retries < 0 || http_timeout_ms <= 0 || http_deadline_ms <= 0) {
      throw Error(ErrorKind::kInvalidArgument, "http retry/timeout settings out of range");
    }
  }
};

inline void apply_env(EngineConfig& cfg) {
  if (const char* url = std::getenv(std::string(kProviderUrlEnv).c_str());
      url != nullptr && *url != '\0') {
    cfg.provider = parse_provider_spec(url);
  }
}

/// Overlays the keys present in `j` onto `cfg`.
inline void apply_json(EngineConfig& cfg, const nlohmann::json& j) {
  try {
    if (j.contains("alpha")) cfg.eval.alpha = j.at("alpha").get<double>();
    if (j.contains("judge")) {
      const auto& jj = j.at("judge");
      cfg.eval.judge.iou_tau = jj.value("iou_tau", cfg.eval.judge.iou_tau);
      cfg.eval.judge.ortho_eps = jj.value("ortho_eps", cfg.eval.judge.ortho_eps);
      cfg.eval.judge.size_delta = jj.value("size_delta", cfg.eval.judge.size_delta);
    }
    if (j.contains("norm_mode")) {
      const auto mode = j.at("norm_mode").get<std::string>();
      if (mode == "batch") cfg.eval.norm_mode = NormMode::kBatch;
      else if (mode == "fixed") cfg.eval.norm_mode = NormMode::kFixed;
      else throw Error(ErrorKind::kSchemaViolation, "norm_mode");
    }
    if (j.contains("det_floor")) cfg.eval.localizer.det_floor = j.at("det_floor").get<double>();
    if (j.contains("placeholder_object")) {
      cfg.eval.placeholder_object = j.at("placeholder_object").get<std::string>();
    }
    if (j.contains("provider") && !j.at("provider").is_null()) {
      cfg.provider = parse_provider_spec(j.at("provider").get<std::string>());
    }
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<unsigned>();
    if (j.contains("http")) {
      const auto& h = j.at("http");
      cfg.http_max_retries = h.value("max_retries", cfg.http_max_retries);
      cfg.http_timeout_ms = h.value("timeout_ms", cfg.http_timeout_ms);
      cfg.http_deadline_ms = h.value("deadline_ms", cfg.http_deadline_ms);
      if (h.contains("bearer_token")) cfg.bearer_token = h.at("bearer_token").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("config: ") + e.what());
  }
}

inline void apply_config_file(EngineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::kSchemaViolation, "config file is not a JSON object");
  }
  apply_json(cfg, j);
}

/// Resolved configuration as embedded in outputs. The bearer token is never
/// echoed.
inline nlohmann::json to_json(const EngineConfig& cfg) {
  nlohmann::json j = config_echo(cfg.eval);
  j["provider"] = cfg.provider ? nlohmann::json(cfg.provider->str()) : nlohmann::json(nullptr);
  j["jobs"] = cfg.jobs;
  j["http"] = {{"max_retries", cfg.http_max_retries},
               {"timeout_ms", cfg.http_timeout_ms},
               {"deadline_ms", cfg.http_deadline_ms},
               {"bearer_token", cfg.bearer_token ? nlohmann::json("<redacted>") : nlohmann::json(nullptr)}};
  return j;
}

inline std::unique_ptr<PerceptionProvider> make_provider(const EngineConfig& cfg) {
  if (!cfg.provider) {
    throw Error(ErrorKind::kInvalidArgument,
                "no provider configured (use --provider or BPM_PROVIDER_URL)");
  }
  if (cfg.provider->kind == ProviderKind::kFixtures) {
    return std::make_unique<FixtureProvider>(cfg.provider->locator);
  }
  HttpProviderOptions opts;
  opts.base_url = cfg.provider->locator;
  opts.bearer_token = cfg.bearer_token;
  opts.max_retries = cfg.http_max_retries;
  opts.request_timeout = std::chrono::milliseconds(cfg.http_timeout_ms);
  opts.deadline = std::chrono::milliseconds(cfg.http_deadline_ms);
  return std::make_unique<HttpProvider>(std::move(opts));
}

}  // namespace bpm
