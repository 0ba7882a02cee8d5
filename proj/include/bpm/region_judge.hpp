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

// Rule-based position and size checks. All threshold comparisons are
// inclusive: a value exactly at a threshold satisfies the check.

#pragma once

#include <cmath>
#include <cstdint>

#include "bpm/errors.hpp"
#include "bpm/geometry.hpp"
#include "bpm/instruction.hpp"
#include "bpm/localizer.hpp"

namespace bpm {

struct JudgeConfig {
  double iou_tau = 0.5;    // saliency IoU threshold
  double ortho_eps = 0.1;  // allowed drift off the requested axis, fraction of image extent
  double size_delta = 0.1; // relative area change that counts as a resize

  void validate() const {
    auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_open_unit(iou_tau)) throw Error(ErrorKind::kInvalidArgument, "iou_tau must be in (0,1)");
    if (!in_open_unit(ortho_eps)) throw Error(ErrorKind::kInvalidArgument, "ortho_eps must be in (0,1)");
    if (!in_open_unit(size_delta)) throw Error(ErrorKind::kInvalidArgument, "size_delta must be in (0,1)");
  }

  friend bool operator==(const JudgeConfig&, const JudgeConfig&) = default;
};

struct PositionJudgement {
  int s_position = 0;
  bool position_ok = false;
  bool direction_ok = false;
  bool saliency_ok = false;
};

struct SizeJudgement {
  int s_size = 0;
  bool area_ok = false;
  bool size_saliency_ok = false;
  bool degenerate_mask = false;
};

struct RegionVerdict {
  PositionJudgement position;
  SizeJudgement size;
};

inline PositionJudgement judge_position(const RegionPair& rp,
                                        const ParsedInstruction& parsed,
                                        ImageDims dims, const JudgeConfig& cfg) {
  PositionJudgement j;
  if (rp.edit_case == EditCase::kRemove) {
    j.position_ok = j.direction_ok = j.saliency_ok = true;
    j.s_position = 1;
    return j;
  }
  if (rp.has(RegionFlag::kTargetNotFound)) return j;

  if (parsed.pos_st == PositionState::kUnchanged) {
    j.position_ok = j.direction_ok = true;
    j.saliency_ok = bbox_iou(rp.b_edit, rp.b_origin) >= cfg.iou_tau;
    j.s_position = j.saliency_ok ? 1 : 0;
    return j;
  }

  const BBox& ref = rp.b_ref ? *rp.b_ref : rp.b_origin;
  const Point2 ce = bbox_center(rp.b_edit);
  const Point2 cr = bbox_center(ref);
  const double dx = ce.x - cr.x;
  const double dy = ce.y - cr.y;
  switch (parsed.pos_st) {
    case PositionState::kLeft:
      j.position_ok = dx < 0.0;
      j.direction_ok = std::abs(dy) <= cfg.ortho_eps * dims.height;
      break;
    case PositionState::kRight:
      j.position_ok = dx > 0.0;
      j.direction_ok = std::abs(dy) <= cfg.ortho_eps * dims.height;
      break;
    case PositionState::kUp:
      j.position_ok = dy < 0.0;
      j.direction_ok = std::abs(dx) <= cfg.ortho_eps * dims.width;
      break;
    case PositionState::kDown:
      j.position_ok = dy > 0.0;
      j.direction_ok = std::abs(dx) <= cfg.ortho_eps * dims.width;
      break;
    case PositionState::kUnchanged:
      break;
  }
  j.saliency_ok = bbox_iou(rp.b_edit, ref) <= cfg.iou_tau;
  j.s_position = (j.position_ok && j.direction_ok && j.saliency_ok) ? 1 : 0;
  return j;
}

/// Size rule on raw pixel counts; split out so it can be checked without
/// building masks.
inline SizeJudgement judge_size_areas(std::int64_t area_origin,
                                      std::int64_t area_edit, SizeState size_st,
                                      EditCase edit_case,
                                      const JudgeConfig& cfg) {
  SizeJudgement j;
  if (edit_case == EditCase::kAdd) {
    j.area_ok = j.size_saliency_ok = true;
    j.s_size = 1;
    return j;
  }
  if (area_origin <= 0) {
    j.degenerate_mask = true;
    return j;
  }
  const double r = double(area_edit) / double(area_origin);
  switch (size_st) {
    case SizeState::kLarger:
      j.area_ok = area_edit > area_origin;
      j.size_saliency_ok = r >= 1.0 + cfg.size_delta;
      break;
    case SizeState::kSmaller:
      j.area_ok = area_edit < area_origin;
      j.size_saliency_ok = r <= 1.0 - cfg.size_delta;
      break;
    case SizeState::kUnchanged:
      j.area_ok = true;
      j.size_saliency_ok = r >= 1.0 - cfg.size_delta && r <= 1.0 + cfg.size_delta;
      break;
  }
  j.s_size = (j.area_ok && j.size_saliency_ok) ? 1 : 0;
  return j;
}

inline SizeJudgement judge_size(const RegionPair& rp,
                                const ParsedInstruction& parsed,
                                const JudgeConfig& cfg) {
  if (rp.has(RegionFlag::kTargetNotFound)) return {};
  return judge_size_areas(mask_area(rp.m_origin), mask_area(rp.m_edit),
                          parsed.size_st, rp.edit_case, cfg);
}

inline RegionVerdict judge_region(const RegionPair& rp,
                                  const ParsedInstruction& parsed,
                                  ImageDims dims, const JudgeConfig& cfg) {
  return {judge_position(rp, parsed, dims, cfg), judge_size(rp, parsed, cfg)};
}

inline double region_score(const RegionVerdict& v) noexcept {
  return double(v.position.s_position + v.size.s_size);
}

}  // namespace bpm
