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

// Locates the source object in the original image and the target object in
// the edited image, then applies the add/remove substitutions.

#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "bpm/errors.hpp"
#include "bpm/geometry.hpp"
#include "bpm/instruction.hpp"
#include "bpm/provider.hpp"

namespace bpm {

enum class RegionFlag { kSourceNotFound, kTargetNotFound, kRefNotFound };

inline constexpr std::string_view to_string(RegionFlag f) {
  switch (f) {
    case RegionFlag::kSourceNotFound: return "source_not_found";
    case RegionFlag::kTargetNotFound: return "target_not_found";
    case RegionFlag::kRefNotFound: return "ref_not_found";
  }
  return "unknown";
}

struct RegionPair {
  BBox b_origin;
  BBox b_edit;
  BinaryMask m_origin;
  BinaryMask m_edit;
  std::optional<BBox> b_ref;
  EditCase edit_case = EditCase::kReplaceOrModify;
  std::set<RegionFlag> flags;

  bool has(RegionFlag f) const { return flags.contains(f); }
};

struct LocalizerConfig {
  double det_floor = 0.25;
};

/// Highest confidence at or above `floor`; ties go to the larger box, then to
/// the lexicographically smallest (x0, y0, x1, y1).
inline std::optional<Detection> select_detection(
    const std::vector<Detection>& detections, double floor) {
  const Detection* best = nullptr;
  auto coords = [](const Detection& d) {
    return std::make_tuple(d.bbox.x0(), d.bbox.y0(), d.bbox.x1(), d.bbox.y1());
  };
  for (const auto& d : detections) {
    if (d.confidence < floor) continue;
    if (!best) {
      best = &d;
      continue;
    }
    if (d.confidence != best->confidence) {
      if (d.confidence > best->confidence) best = &d;
    } else if (d.bbox.area() != best->bbox.area()) {
      if (d.bbox.area() > best->bbox.area()) best = &d;
    } else if (coords(d) < coords(*best)) {
      best = &d;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

struct LocatedObject {
  BBox box;
  BinaryMask mask;
};

inline std::optional<LocatedObject> locate_object(
    const RasterImage& image, const std::string& query, ImageRole role,
    const PerceptionProvider& provider, const LocalizerConfig& cfg,
    const std::string& sample_id) {
  RequestContext ctx{sample_id, role, std::nullopt};
  std::vector<Detection> usable;
  for (auto d : provider.detect(image, query, ctx)) {
    // Detector boxes may overflow the frame; boxes with nothing left inside
    // are dropped before selection.
    if (auto clamped = clamp_to_image(d.bbox, image.dims())) {
      d.bbox = *clamped;
      usable.push_back(std::move(d));
    }
  }
  const auto best = select_detection(usable, cfg.det_floor);
  if (!best) return std::nullopt;
  BinaryMask mask = provider.segment(image, best->bbox, ctx);
  if (mask.dims() != image.dims()) mask = resize_nearest(mask, image.dims());
  return LocatedObject{best->bbox, std::move(mask)};
}

inline RegionPair localize(const ParsedInstruction& parsed,
                           const RasterImage& origin, const RasterImage& edited,
                           const PerceptionProvider& provider,
                           const LocalizerConfig& cfg,
                           const std::string& sample_id) {
  if (origin.dims() != edited.dims()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "localize: edited image must be resized to the original first");
  }
  const ImageDims dims = origin.dims();
  const LocatedObject missing{BBox::full_image(dims),
                              BinaryMask(dims.width, dims.height)};

  RegionPair rp;
  rp.edit_case = parsed.edit_case();
  std::optional<LocatedObject> source;
  std::optional<LocatedObject> target;
  if (parsed.source_object) {
    source = locate_object(origin, *parsed.source_object, ImageRole::kOrigin,
                           provider, cfg, sample_id);
  }
  if (parsed.target_object) {
    target = locate_object(edited, *parsed.target_object, ImageRole::kEdited,
                           provider, cfg, sample_id);
  }

  switch (rp.edit_case) {
    case EditCase::kAdd: {
      if (!target) rp.flags.insert(RegionFlag::kTargetNotFound);
      const LocatedObject& t = target ? *target : missing;
      rp.b_edit = rp.b_origin = t.box;
      rp.m_edit = rp.m_origin = t.mask;
      break;
    }
    case EditCase::kRemove: {
      if (!source) {
        throw Error(ErrorKind::kLocalizationFailure,
                    sample_id + ": source object '" + *parsed.source_object +
                        "' not found in the original image");
      }
      rp.b_edit = rp.b_origin = source->box;
      rp.m_edit = rp.m_origin = source->mask;
      break;
    }
    case EditCase::kReplaceOrModify: {
      if (!source && !target) {
        throw Error(ErrorKind::kLocalizationFailure,
                    sample_id + ": neither source nor target object was found");
      }
      if (!source) rp.flags.insert(RegionFlag::kSourceNotFound);
      if (!target) rp.flags.insert(RegionFlag::kTargetNotFound);
      const LocatedObject& s = source ? *source : missing;
      const LocatedObject& t = target ? *target : missing;
      rp.b_origin = s.box;
      rp.m_origin = s.mask;
      rp.b_edit = t.box;
      rp.m_edit = t.mask;
      break;
    }
  }

  if (parsed.reference_object) {
    if (auto ref = locate_object(edited, *parsed.reference_object,
                                 ImageRole::kEdited, provider, cfg, sample_id)) {
      rp.b_ref = ref->box;
    } else {
      rp.flags.insert(RegionFlag::kRefNotFound);
    }
  }
  return rp;
}

inline BinaryMask union_edit_mask(const RegionPair& rp) {
  return mask_union(rp.m_origin, rp.m_edit);
}

}  // namespace bpm
