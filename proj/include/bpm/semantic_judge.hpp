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

// Modification (directional embedding similarity inside the edited regions)
// and preservation (RMS distance outside them) scores.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "bpm/errors.hpp"
#include "bpm/geometry.hpp"
#include "bpm/provider.hpp"

namespace bpm {

inline constexpr double kDegenerateNorm = 1e-9;

/// Cosine similarity of (edit - origin) and (target - source). Zero when
/// either difference vanishes.
inline double directional_similarity(std::span<const double> img_origin,
                                     std::span<const double> img_edit,
                                     std::span<const double> txt_source,
                                     std::span<const double> txt_target) {
  const std::size_t n = img_origin.size();
  if (img_edit.size() != n || txt_source.size() != n || txt_target.size() != n) {
    throw Error(ErrorKind::kDimensionMismatch,
                "directional_similarity: embedding dimensions differ");
  }
  double dot = 0.0, nn_img = 0.0, nn_txt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double di = img_edit[i] - img_origin[i];
    const double dt = txt_target[i] - txt_source[i];
    dot += di * dt;
    nn_img += di * di;
    nn_txt += dt * dt;
  }
  const double ni = std::sqrt(nn_img);
  const double nt = std::sqrt(nn_txt);
  if (ni < kDegenerateNorm || nt < kDegenerateNorm) return 0.0;
  return std::clamp(dot / (ni * nt), -1.0, 1.0);
}

inline double directional_similarity(const EmbeddingVector& img_origin,
                                     const EmbeddingVector& img_edit,
                                     const EmbeddingVector& txt_source,
                                     const EmbeddingVector& txt_target) {
  return directional_similarity(img_origin.values, img_edit.values,
                                txt_source.values, txt_target.values);
}

struct PreservationResult {
  double score = 1.0;
  bool all_excluded = false;
};

/// 1 - RMS over every channel value of the pixels `excluded` leaves in place.
inline PreservationResult preservation_score(const RasterImage& a,
                                             const RasterImage& b,
                                             const BinaryMask& excluded) {
  if (a.dims() != b.dims() || a.dims() != excluded.dims()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "preservation_score: image/mask sizes differ");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (excluded.at(x, y)) continue;
      for (int c = 0; c < RasterImage::kChannels; ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        sum += d * d;
      }
      count += RasterImage::kChannels;
    }
  }
  if (count == 0) return {1.0, true};
  return {std::clamp(1.0 - std::sqrt(sum / double(count)), 0.0, 1.0), false};
}

struct ValueRange {
  double lo = 0.0;
  double hi = 1.0;
};

inline constexpr ValueRange kModifyRange{-1.0, 1.0};
inline constexpr ValueRange kPreserveRange{0.0, 1.0};

/// Batch min-max scaling, or an affine map from `fixed_range` clamped to
/// [0,1]. A constant batch maps to 0.5.
inline std::vector<double> minmax_normalize(
    std::span<const double> values,
    std::optional<ValueRange> fixed_range = std::nullopt) {
  if (values.empty()) throw Error(ErrorKind::kEmptyBatch, "minmax_normalize");
  std::vector<double> out(values.size());
  if (fixed_range) {
    const double span = fixed_range->hi - fixed_range->lo;
    if (!(span > 0.0)) throw Error(ErrorKind::kInvalidArgument, "empty fixed range");
    std::transform(values.begin(), values.end(), out.begin(), [&](double v) {
      return std::clamp((v - fixed_range->lo) / span, 0.0, 1.0);
    });
    return out;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double v) { return (v - lo) / (hi - lo); });
  return out;
}

enum class NormMode { kBatch, kFixed };

inline constexpr std::string_view to_string(NormMode m) {
  return m == NormMode::kBatch ? "batch" : "fixed";
}

struct SemanticRaw {
  double s_modify_raw = 0.0;
  double s_preserve_raw = 1.0;
};

struct SemanticNormalized {
  double s_modify_norm = 0.0;
  double s_preserve_norm = 0.0;
  double s_semantic() const noexcept { return s_modify_norm + s_preserve_norm; }
};

inline std::vector<SemanticNormalized> normalize_semantic(
    std::span<const SemanticRaw> batch, NormMode mode) {
  if (batch.empty()) throw Error(ErrorKind::kEmptyBatch, "semantic_score");
  std::vector<double> modify, preserve;
  modify.reserve(batch.size());
  preserve.reserve(batch.size());
  for (const auto& r : batch) {
    modify.push_back(r.s_modify_raw);
    preserve.push_back(r.s_preserve_raw);
  }
  const bool fixed = mode == NormMode::kFixed;
  const auto m = minmax_normalize(modify, fixed ? std::optional(kModifyRange) : std::nullopt);
  const auto p = minmax_normalize(preserve, fixed ? std::optional(kPreserveRange) : std::nullopt);
  std::vector<SemanticNormalized> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) out[i] = {m[i], p[i]};
  return out;
}

inline std::vector<double> semantic_score(std::span<const SemanticRaw> batch,
                                          NormMode mode) {
  const auto norm = normalize_semantic(batch, mode);
  std::vector<double> out;
  out.reserve(norm.size());
  for (const auto& n : norm) out.push_back(n.s_semantic());
  return out;
}

}  // namespace bpm
