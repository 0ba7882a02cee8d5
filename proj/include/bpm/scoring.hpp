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

// Per-sample evaluation pipeline and batch aggregation:
//   parse -> localize -> region judge -> semantic raw scores,
// then batch normalization and BPM = alpha * S_semantic + (1 - alpha) * S_region.

#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpm/errors.hpp"
#include "bpm/geometry.hpp"
#include "bpm/image_io.hpp"
#include "bpm/instruction.hpp"
#include "bpm/localizer.hpp"
#include "bpm/manifest.hpp"
#include "bpm/provider.hpp"
#include "bpm/region_judge.hpp"
#include "bpm/semantic_judge.hpp"

namespace bpm {

inline constexpr int kScoreSchemaVersion = 1;
inline constexpr double kDefaultAlpha = 0.7;

struct EvaluationConfig {
  double alpha = kDefaultAlpha;
  JudgeConfig judge;
  NormMode norm_mode = NormMode::kBatch;
  LocalizerConfig localizer;
  // Text standing in for the missing object of add/remove edits.
  std::string placeholder_object = "background";
};

inline double bpm_combine(double s_semantic, double s_region, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kAlphaOutOfRange, "alpha must lie in [0,1]");
  }
  return alpha * s_semantic + (1.0 - alpha) * s_region;
}

struct ScoreBreakdown {
  std::string sample_id;
  std::string model_tag;
  std::optional<ParsedInstruction> parsed;
  RegionVerdict region;
  double s_region = 0.0;
  double s_modify_raw = -1.0;
  double s_preserve_raw = 0.0;
  double s_modify_norm = 0.0;
  double s_preserve_norm = 0.0;
  double s_semantic = 0.0;
  double bpm = 0.0;
  std::set<std::string> flags;
  // Set when the pipeline could not complete; component scores are then the
  // worst case and the sample is left out of the normalization population.
  std::optional<std::string> error;
  nlohmann::json config_echo;

  int s_position() const noexcept { return region.position.s_position; }
  int s_size() const noexcept { return region.size.s_size; }
  bool failed() const noexcept { return error.has_value(); }
};

struct SampleInput {
  std::string id;
  std::string model_tag;
  std::string instruction;
  RasterImage origin;
  RasterImage edited;
};

namespace detail {

inline std::string flag_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kLocalizationFailure: return "localization_failure";
    case ErrorKind::kProviderUnavailable: return "provider_unavailable";
    case ErrorKind::kFixtureMiss: return "fixture_miss";
    case ErrorKind::kSchemaViolation: return "schema_violation";
    case ErrorKind::kEmptyCrop: return "empty_crop";
    case ErrorKind::kIo: return "io_error";
    default: return "evaluation_error";
  }
}

inline ScoreBreakdown failed_breakdown(ScoreBreakdown b, std::string flag,
                                       std::string message) {
  b.region = {};
  b.s_region = 0.0;
  b.s_modify_raw = -1.0;
  b.s_preserve_raw = 0.0;
  b.flags.insert(std::move(flag));
  b.error = std::move(message);
  return b;
}

}  // namespace detail

inline ScoreBreakdown evaluate_sample(const SampleInput& input,
                                      const PerceptionProvider& provider,
                                      const EvaluationConfig& cfg) {
  ScoreBreakdown b;
  b.sample_id = input.id;
  b.model_tag = input.model_tag;
  try {
    const RasterImage& origin = input.origin;
    // Pixel alignment is required for the exclusion masks.
    const RasterImage edited = resize_bilinear(input.edited, origin.dims());

    const RequestContext parse_ctx{input.id, ImageRole::kOrigin, std::nullopt};
    if (provider.capabilities().supports_parse) {
      b.parsed = provider.parse(input.instruction, parse_ctx);
    } else {
      b.parsed = fallback_parse(input.instruction);
      if (!b.parsed) {
        return detail::failed_breakdown(std::move(b), "unparseable",
                                        "instruction not covered by the fallback grammar");
      }
    }
    const ParsedInstruction& parsed = *b.parsed;

    const RegionPair rp =
        localize(parsed, origin, edited, provider, cfg.localizer, input.id);
    for (auto f : rp.flags) b.flags.insert(std::string(to_string(f)));

    b.region = judge_region(rp, parsed, origin.dims(), cfg.judge);
    if (b.region.size.degenerate_mask) b.flags.insert("degenerate_mask");
    b.s_region = region_score(b.region);

    const RasterImage crop_origin = crop_by_bbox(origin, rp.b_origin);
    const RasterImage crop_edit = crop_by_bbox(edited, rp.b_edit);
    const auto e_origin = provider.embed_image(
        crop_origin, {input.id, ImageRole::kOrigin, rp.b_origin});
    const auto e_edit = provider.embed_image(
        crop_edit, {input.id, ImageRole::kEdited, rp.b_edit});
    const std::string source_text = parsed.source_object.value_or(cfg.placeholder_object);
    const std::string target_text = parsed.target_object.value_or(cfg.placeholder_object);
    const auto t_source = provider.embed_text(source_text, parse_ctx);
    const auto t_target = provider.embed_text(target_text, parse_ctx);
    b.s_modify_raw = directional_similarity(e_origin, e_edit, t_source, t_target);

    const auto preserve = preservation_score(origin, edited, union_edit_mask(rp));
    if (preserve.all_excluded) b.flags.insert("all_excluded");
    b.s_preserve_raw = preserve.score;
  } catch (const Error& e) {
    return detail::failed_breakdown(std::move(b), detail::flag_for(e.kind()), e.what());
  } catch (const std::exception& e) {
    return detail::failed_breakdown(std::move(b), "evaluation_error", e.what());
  }
  return b;
}

inline nlohmann::json config_echo(const EvaluationConfig& cfg) {
  return {{"alpha", cfg.alpha},
          {"judge",
           {{"iou_tau", cfg.judge.iou_tau},
            {"ortho_eps", cfg.judge.ortho_eps},
            {"size_delta", cfg.judge.size_delta}}},
          {"norm_mode", to_string(cfg.norm_mode)},
          {"det_floor", cfg.localizer.det_floor},
          {"placeholder_object", cfg.placeholder_object}};
}

/// Fills the normalized fields, S_semantic and BPM. Normalization runs over
/// the samples that completed; failed samples keep zero normalized scores.
inline void finalize_batch(std::vector<ScoreBreakdown>& batch,
                           const EvaluationConfig& cfg) {
  std::vector<SemanticRaw> raw;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].failed()) continue;
    raw.push_back({batch[i].s_modify_raw, batch[i].s_preserve_raw});
    index.push_back(i);
  }
  for (auto& b : batch) {
    b.s_modify_norm = b.s_preserve_norm = 0.0;
  }
  if (!raw.empty()) {
    const auto norm = normalize_semantic(raw, cfg.norm_mode);
    for (std::size_t k = 0; k < index.size(); ++k) {
      batch[index[k]].s_modify_norm = norm[k].s_modify_norm;
      batch[index[k]].s_preserve_norm = norm[k].s_preserve_norm;
    }
  }
  for (auto& b : batch) {
    b.s_semantic = b.s_modify_norm + b.s_preserve_norm;
    b.bpm = bpm_combine(b.s_semantic, b.s_region, cfg.alpha);
  }
}

/// Runs `task(i)` for i in [0, n) on up to `jobs` threads.
inline void parallel_for(std::size_t n, unsigned jobs,
                         const std::function<void(std::size_t)>& task) {
  jobs = std::max(1u, std::min<unsigned>(jobs, unsigned(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(jobs);
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) task(i);
    });
  }
}

/// Evaluates every manifest entry; results keep manifest order.
inline std::vector<ScoreBreakdown> evaluate_manifest(
    const std::vector<SampleManifestEntry>& manifest,
    const PerceptionProvider& provider, const EvaluationConfig& cfg,
    unsigned jobs) {
  std::vector<ScoreBreakdown> results(manifest.size());
  parallel_for(manifest.size(), jobs, [&](std::size_t i) {
    const auto& e = manifest[i];
    try {
      SampleInput in{e.id, e.model_tag, e.instruction, load_image(e.original_path),
                     load_image(e.edited_path)};
      results[i] = evaluate_sample(in, provider, cfg);
    } catch (const Error& err) {
      ScoreBreakdown b;
      b.sample_id = e.id;
      b.model_tag = e.model_tag;
      results[i] = detail::failed_breakdown(std::move(b), detail::flag_for(err.kind()),
                                            err.what());
    } catch (const std::exception& err) {
      ScoreBreakdown b;
      b.sample_id = e.id;
      b.model_tag = e.model_tag;
      results[i] = detail::failed_breakdown(std::move(b), "evaluation_error", err.what());
    }
  });
  finalize_batch(results, cfg);
  const auto echo = config_echo(cfg);
  for (auto& r : results)
    if (r.config_echo.is_null()) r.config_echo = echo;
  return results;
}

inline nlohmann::json to_json(const ScoreBreakdown& b) {
  nlohmann::json j;
  j["bpm_schema"] = kScoreSchemaVersion;
  j["sample_id"] = b.sample_id;
  j["model_tag"] = b.model_tag;
  j["parsed"] = b.parsed ? to_json(*b.parsed) : nlohmann::json(nullptr);
  j["s_position"] = b.s_position();
  j["s_size"] = b.s_size();
  j["criteria"] = {{"position_ok", b.region.position.position_ok},
                   {"direction_ok", b.region.position.direction_ok},
                   {"saliency_ok", b.region.position.saliency_ok},
                   {"area_ok", b.region.size.area_ok},
                   {"size_saliency_ok", b.region.size.size_saliency_ok}};
  j["s_region"] = b.s_region;
  j["s_modify_raw"] = b.s_modify_raw;
  j["s_preserve_raw"] = b.s_preserve_raw;
  j["s_modify_norm"] = b.s_modify_norm;
  j["s_preserve_norm"] = b.s_preserve_norm;
  j["s_semantic"] = b.s_semantic;
  j["bpm"] = b.bpm;
  j["flags"] = b.flags;
  j["error"] = b.error ? nlohmann::json(*b.error) : nlohmann::json(nullptr);
  j["config"] = b.config_echo;
  return j;
}

inline ScoreBreakdown score_from_json(const nlohmann::json& j) {
  try {
    if (j.value("bpm_schema", 0) != kScoreSchemaVersion) {
      throw Error(ErrorKind::kSchemaViolation, "bpm_schema");
    }
    ScoreBreakdown b;
    b.sample_id = j.at("sample_id").get<std::string>();
    b.model_tag = j.value("model_tag", std::string{});
    if (j.contains("parsed") && !j.at("parsed").is_null()) {
      b.parsed = validate_parse_response(j.at("parsed"));
    }
    b.region.position.s_position = j.at("s_position").get<int>();
    b.region.size.s_size = j.at("s_size").get<int>();
    if (j.contains("criteria")) {
      const auto& c = j.at("criteria");
      b.region.position.position_ok = c.value("position_ok", false);
      b.region.position.direction_ok = c.value("direction_ok", false);
      b.region.position.saliency_ok = c.value("saliency_ok", false);
      b.region.size.area_ok = c.value("area_ok", false);
      b.region.size.size_saliency_ok = c.value("size_saliency_ok", false);
    }
    b.s_region = j.at("s_region").get<double>();
    b.s_modify_raw = j.at("s_modify_raw").get<double>();
    b.s_preserve_raw = j.at("s_preserve_raw").get<double>();
    b.s_modify_norm = j.at("s_modify_norm").get<double>();
    b.s_preserve_norm = j.at("s_preserve_norm").get<double>();
    b.s_semantic = j.at("s_semantic").get<double>();
    b.bpm = j.at("bpm").get<double>();
    if (j.contains("flags")) b.flags = j.at("flags").get<std::set<std::string>>();
    if (j.contains("error") && !j.at("error").is_null()) {
      b.error = j.at("error").get<std::string>();
    }
    if (j.contains("config")) b.config_echo = j.at("config");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("score record: ") + e.what());
  }
}

inline void write_scores_jsonl(const std::filesystem::path& path,
                               const std::vector<ScoreBreakdown>& scores) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  for (const auto& s : scores) out << to_json(s).dump() << '\n';
}

inline std::vector<ScoreBreakdown> read_scores_jsonl(const std::filesystem::path& path) {
  std::vector<ScoreBreakdown> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& j) { out.push_back(score_from_json(j)); });
  return out;
}

}  // namespace bpm
