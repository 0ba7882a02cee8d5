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

#include <gtest/gtest.h>

#include "bpm/region_judge.hpp"
#include "region_oracle.hpp"
#include "test_util.hpp"

namespace bpm {
namespace {

using testing::Gen;

BBox centered(double cx, double cy, double w, double h) {
  return BBox::make(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2);
}

RegionPair pair(const BBox& origin, const BBox& edit, std::optional<BBox> ref = std::nullopt,
                EditCase ec = EditCase::kReplaceOrModify) {
  RegionPair rp;
  rp.b_origin = origin;
  rp.b_edit = edit;
  rp.b_ref = ref;
  rp.edit_case = ec;
  return rp;
}

ParsedInstruction with_pos(PositionState s) {
  ParsedInstruction p;
  p.source_object = p.target_object = "x";
  p.pos_st = s;
  return p;
}

oracle::Box ob(const BBox& b) { return {b.x0(), b.y0(), b.x1(), b.y1()}; }

const ImageDims kDims{200, 100};
const JudgeConfig kCfg;

TEST(JudgeConfig, Validation) {
  EXPECT_NO_THROW(kCfg.validate());
  for (JudgeConfig c : {JudgeConfig{0.0, 0.1, 0.1}, JudgeConfig{0.5, 1.0, 0.1},
                        JudgeConfig{0.5, 0.1, -0.2}}) {
    EXPECT_THROW(c.validate(), Error);
  }
}

TEST(JudgePosition, LeftMoveRelativeToReference) {
  const auto ref = centered(100, 50, 20, 20);
  const auto rp = pair(ref, centered(40, 52, 20, 20), ref);
  const auto j = judge_position(rp, with_pos(PositionState::kLeft), kDims, kCfg);
  EXPECT_TRUE(j.position_ok && j.direction_ok && j.saliency_ok);
  EXPECT_EQ(j.s_position, 1);
}

TEST(JudgePosition, OrthogonalDriftFails) {
  const auto ref = centered(100, 50, 20, 20);
  const auto rp = pair(ref, centered(40, 90, 20, 20), ref);
  const auto j = judge_position(rp, with_pos(PositionState::kLeft), kDims, kCfg);
  EXPECT_TRUE(j.position_ok);
  EXPECT_FALSE(j.direction_ok);
  EXPECT_EQ(j.s_position, 0);
}

TEST(JudgePosition, UnchangedIdenticalBoxes) {
  const auto b = centered(50, 50, 30, 30);
  EXPECT_EQ(judge_position(pair(b, b), with_pos(PositionState::kUnchanged), kDims, kCfg).s_position, 1);
}

TEST(JudgePosition, ThresholdsAreInclusive) {
  // IoU exactly 0.5: box of width 20 vs shifted box overlapping 2/3 of width.
  const auto a = BBox::make(0, 0, 30, 10), b = BBox::make(10, 0, 40, 10);
  ASSERT_DOUBLE_EQ(bbox_iou(a, b), 0.5);
  EXPECT_EQ(judge_position(pair(a, b), with_pos(PositionState::kUnchanged), kDims, kCfg).s_position, 1);
  EXPECT_TRUE(judge_position(pair(b, a), with_pos(PositionState::kLeft), kDims, kCfg).saliency_ok);
  // Orthogonal drift exactly eps * height.
  const auto o = centered(100, 50, 10, 10);
  EXPECT_TRUE(judge_position(pair(o, centered(50, 60, 10, 10)), with_pos(PositionState::kLeft),
                             kDims, kCfg)
                  .direction_ok);
}

TEST(JudgePosition, ZeroDisplacementIsNotAMove) {
  const auto b = centered(100, 50, 10, 10);
  for (auto s : {PositionState::kLeft, PositionState::kRight, PositionState::kUp, PositionState::kDown}) {
    EXPECT_FALSE(judge_position(pair(b, b), with_pos(s), kDims, kCfg).position_ok);
  }
}

TEST(JudgePosition, RemoveAlwaysScoresOne) {
  const auto rp = pair(centered(10, 10, 5, 5), centered(10, 10, 5, 5), std::nullopt, EditCase::kRemove);
  for (auto s : kAllPositionStates)
    EXPECT_EQ(judge_position(rp, with_pos(s), kDims, kCfg).s_position, 1);
}

TEST(JudgePosition, MissingTargetScoresZeroWithAllCriteriaFalse) {
  auto rp = pair(centered(10, 10, 5, 5), BBox::full_image(kDims));
  rp.flags.insert(RegionFlag::kTargetNotFound);
  const auto j = judge_position(rp, with_pos(PositionState::kUnchanged), kDims, kCfg);
  EXPECT_EQ(j.s_position, 0);
  EXPECT_FALSE(j.position_ok || j.direction_ok || j.saliency_ok);
}

TEST(JudgePosition, TranslationInvariance) {
  Gen g(101);
  for (int i = 0; i < 2000; ++i) {
    const auto o = g.box(200, 100), e = g.box(200, 100), r = g.box(200, 100);
    const double dx = g.integer(-50, 50), dy = g.integer(-30, 30);
    for (auto s : kAllPositionStates) {
      const auto a = judge_position(pair(o, e, r), with_pos(s), kDims, kCfg);
      const auto b = judge_position(
          pair(o.translated(dx, dy), e.translated(dx, dy), r.translated(dx, dy)), with_pos(s),
          kDims, kCfg);
      ASSERT_EQ(a.s_position, b.s_position);
    }
  }
}

TEST(JudgePosition, MatchesRuleOracleOnRandomBoxes) {
  Gen g(102);
  for (int i = 0; i < 3000; ++i) {
    const auto o = g.box(200, 100), e = g.box(200, 100), r = g.box(200, 100);
    const bool use_ref = g.coin();
    JudgeConfig cfg{g.uniform(0.05, 0.95), g.uniform(0.05, 0.95), 0.1};
    for (auto s : kAllPositionStates) {
      const auto rp = pair(o, e, use_ref ? std::optional(r) : std::nullopt);
      const oracle::Box orb = ob(r);
      ASSERT_EQ(judge_position(rp, with_pos(s), kDims, cfg).s_position,
                oracle::position(std::string(to_string(s)), ob(e), ob(o), use_ref ? &orb : nullptr,
                                 200, 100, cfg.iou_tau, cfg.ortho_eps, false, false));
    }
  }
}

TEST(JudgeSize, Examples) {
  EXPECT_EQ(judge_size_areas(100, 150, SizeState::kLarger, EditCase::kReplaceOrModify, kCfg).s_size, 1);
  EXPECT_EQ(judge_size_areas(100, 100, SizeState::kUnchanged, EditCase::kReplaceOrModify, kCfg).s_size, 1);
  EXPECT_EQ(judge_size_areas(100, 95, SizeState::kSmaller, EditCase::kReplaceOrModify, kCfg).s_size, 0);
}

TEST(JudgeSize, BoundariesInclusive) {
  EXPECT_EQ(judge_size_areas(100, 110, SizeState::kLarger, EditCase::kReplaceOrModify, kCfg).s_size, 1);
  EXPECT_EQ(judge_size_areas(100, 90, SizeState::kSmaller, EditCase::kReplaceOrModify, kCfg).s_size, 1);
  EXPECT_EQ(judge_size_areas(100, 110, SizeState::kUnchanged, EditCase::kReplaceOrModify, kCfg).s_size, 1);
  EXPECT_EQ(judge_size_areas(100, 90, SizeState::kUnchanged, EditCase::kReplaceOrModify, kCfg).s_size, 1);
  EXPECT_EQ(judge_size_areas(100, 111, SizeState::kUnchanged, EditCase::kReplaceOrModify, kCfg).s_size, 0);
}

TEST(JudgeSize, AddIsFullScore) {
  for (auto s : kAllSizeStates)
    EXPECT_EQ(judge_size_areas(0, 0, s, EditCase::kAdd, kCfg).s_size, 1);
}

TEST(JudgeSize, DegenerateOriginMask) {
  const auto j = judge_size_areas(0, 50, SizeState::kLarger, EditCase::kReplaceOrModify, kCfg);
  EXPECT_EQ(j.s_size, 0);
  EXPECT_TRUE(j.degenerate_mask);
}

TEST(JudgeSize, MissingTargetScoresZero) {
  RegionPair rp;
  rp.edit_case = EditCase::kAdd;
  rp.m_origin = rp.m_edit = BinaryMask(4, 4);
  rp.flags.insert(RegionFlag::kTargetNotFound);
  EXPECT_EQ(judge_size(rp, with_pos(PositionState::kUnchanged), kCfg).s_size, 0);
}

TEST(JudgeSize, FromMasks) {
  RegionPair rp;
  rp.m_origin = BinaryMask(20, 20);
  rp.m_origin.fill_box(BBox::make(0, 0, 10, 10));
  rp.m_edit = BinaryMask(20, 20);
  rp.m_edit.fill_box(BBox::make(0, 0, 15, 10));
  ParsedInstruction p = with_pos(PositionState::kUnchanged);
  p.size_st = SizeState::kLarger;
  EXPECT_EQ(judge_size(rp, p, kCfg).s_size, 1);
}

TEST(JudgeSize, ScaleInvariance) {
  Gen g(103);
  for (int i = 0; i < 2000; ++i) {
    const long long a = g.integer(1, 500), b = g.integer(0, 1000), k = g.integer(1, 50);
    for (auto s : kAllSizeStates)
      ASSERT_EQ(judge_size_areas(a, b, s, EditCase::kReplaceOrModify, kCfg).s_size,
                judge_size_areas(a * k, b * k, s, EditCase::kReplaceOrModify, kCfg).s_size);
  }
}

TEST(JudgeSize, LargerIsMonotoneInEditArea) {
  for (long long a = 1; a <= 200; ++a) {
    int prev = 0;
    for (long long b = 0; b <= 400; ++b) {
      const int s = judge_size_areas(a, b, SizeState::kLarger, EditCase::kReplaceOrModify, kCfg).s_size;
      ASSERT_GE(s, prev);
      prev = s;
    }
  }
}

TEST(JudgeSize, MatchesRuleOracle) {
  Gen g(104);
  for (int i = 0; i < 5000; ++i) {
    const long long a = g.integer(0, 300), b = g.integer(0, 600);
    const double delta = g.uniform(0.01, 0.99);
    const JudgeConfig cfg{0.5, 0.1, delta};
    for (auto s : kAllSizeStates)
      ASSERT_EQ(judge_size_areas(a, b, s, EditCase::kReplaceOrModify, cfg).s_size,
                oracle::size(std::string(to_string(s)), a, b, delta, false, false));
  }
}

TEST(RegionScore, Sums) {
  RegionVerdict v;
  v.position.s_position = 1;
  v.size.s_size = 1;
  EXPECT_EQ(region_score(v), 2.0);
  v.position.s_position = 0;
  EXPECT_EQ(region_score(v), 1.0);
  v.size.s_size = 0;
  EXPECT_EQ(region_score(v), 0.0);
}

}  // namespace
}  // namespace bpm
