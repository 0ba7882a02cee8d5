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

#include <fstream>

#include "bpm/image_io.hpp"
#include "bpm/provider.hpp"
#include "test_util.hpp"

namespace bpm {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidArgument;
}

json unit_json(std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

// Minimal one-sample fixture tree.
fs::path write_fixture() {
  const auto root = testing::scratch_dir("fixture_provider");
  std::ofstream(root / "capabilities.json") << R"({"embed_dim": 3, "version": "t"})";
  std::ofstream(root / "embeddings.json")
      << json{{"text", {{"clock", unit_json({1, 0, 0})}, {"street sign", unit_json({0, 1, 0})}}}}
             .dump();
  fs::create_directories(root / "s1");
  std::ofstream(root / "s1" / "parse.json")
      << R"({"source_object":"clock","target_object":"street sign","pos_st":"unchanged","size_st":"unchanged"})";
  std::ofstream(root / "s1" / "detections.json") << json{
      {"origin",
       {{"clock",
         {{{"bbox", {1, 1, 5, 5}}, {"confidence", 0.9}, {"label", "clock"}, {"mask", 0}},
          {{"bbox", {0, 0, 2, 2}}, {"confidence", 0.3}, {"label", "clock"}}}}}},
      {"edited", {{"street sign", json::array()}}}}.dump();
  BinaryMask m(4, 4);
  m.set(1, 1, true);
  save_mask(root / "s1" / "mask_origin_0.png", m);
  std::ofstream(root / "s1" / "embeddings.json") << json{
      {"text", {{"clock", unit_json({0, 0, 1})}}},
      {"crop", {{"origin:1,1,5,5", unit_json({1, 1, 0})}, {"edited", unit_json({0, 1, 1})}}}}.dump();
  return root;
}

TEST(FixtureProvider, MissingRootIsUnavailable) {
  EXPECT_EQ(kind_of([] { FixtureProvider p("/nonexistent/fixtures/dir"); }),
            ErrorKind::kProviderUnavailable);
}

TEST(FixtureProvider, CapabilitiesFromFile) {
  FixtureProvider p(write_fixture());
  EXPECT_EQ(p.capabilities().embed_dim, 3);
  EXPECT_EQ(p.capabilities().version, "t");
}

TEST(FixtureProvider, ParseIsValidated) {
  FixtureProvider p(write_fixture());
  const auto parsed = p.parse("whatever", {"s1", ImageRole::kOrigin, {}});
  EXPECT_EQ(parsed.source_object, "clock");
  EXPECT_EQ(kind_of([&] { p.parse("x", {"nope", ImageRole::kOrigin, {}}); }),
            ErrorKind::kFixtureMiss);
}

TEST(FixtureProvider, DetectReturnsStoredBoxes) {
  FixtureProvider p(write_fixture());
  const RasterImage img(8, 8);
  const auto d = p.detect(img, "clock", {"s1", ImageRole::kOrigin, {}});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].bbox, BBox::make(1, 1, 5, 5));
  EXPECT_DOUBLE_EQ(d[0].confidence, 0.9);
  EXPECT_EQ(d[1].bbox, BBox::make(0, 0, 2, 2));
  EXPECT_TRUE(p.detect(img, "street sign", {"s1", ImageRole::kEdited, {}}).empty());
  EXPECT_EQ(kind_of([&] { p.detect(img, "clock", {"s1", ImageRole::kEdited, {}}); }),
            ErrorKind::kFixtureMiss);
}

TEST(FixtureProvider, SegmentMatchesBoxAndResizesMask) {
  FixtureProvider p(write_fixture());
  const RasterImage img(8, 8);
  const auto m = p.segment(img, BBox::make(1.2, 0.8, 5, 5), {"s1", ImageRole::kOrigin, {}});
  EXPECT_EQ(m.dims(), (ImageDims{8, 8}));
  EXPECT_EQ(mask_area(m), 4);  // one source pixel, scaled 2x
  EXPECT_TRUE(m.at(2, 2));
  EXPECT_EQ(kind_of([&] { p.segment(img, BBox::make(0, 0, 2, 2), {"s1", ImageRole::kOrigin, {}}); }),
            ErrorKind::kFixtureMiss);
}

TEST(FixtureProvider, EmbeddingLookups) {
  FixtureProvider p(write_fixture());
  const RasterImage img(4, 4);
  const auto e = p.embed_image(img, {"s1", ImageRole::kOrigin, BBox::make(1, 1, 5, 5)});
  EXPECT_NEAR(e.norm(), 1.0, 1e-12);
  EXPECT_NEAR(e.values[0], std::sqrt(0.5), 1e-12);
  // Role-level fallback when no box-specific crop is stored.
  const auto f = p.embed_image(img, {"s1", ImageRole::kEdited, BBox::make(0, 0, 4, 4)});
  EXPECT_NEAR(f.values[2], std::sqrt(0.5), 1e-12);
  EXPECT_EQ(kind_of([&] { p.embed_image(img, {"s1", ImageRole::kOrigin, BBox::make(0, 0, 4, 4)}); }),
            ErrorKind::kFixtureMiss);
}

TEST(FixtureProvider, TextEmbeddingPrefersSampleOverShared) {
  FixtureProvider p(write_fixture());
  const auto own = p.embed_text("clock", {"s1", ImageRole::kOrigin, {}});
  EXPECT_EQ(own.values, (std::vector<double>{0, 0, 1}));
  const auto shared = p.embed_text("street sign", {"s1", ImageRole::kOrigin, {}});
  EXPECT_EQ(shared.values, (std::vector<double>{0, 1, 0}));
  EXPECT_NEAR(shared.norm(), 1.0, 1e-15);
  EXPECT_EQ(kind_of([&] { p.embed_text("dog", {"s1", ImageRole::kOrigin, {}}); }),
            ErrorKind::kFixtureMiss);
}

TEST(FixtureProvider, WrongDimensionIsSchemaViolation) {
  const auto root = write_fixture();
  std::ofstream(root / "embeddings.json") << json{{"text", {{"clock", {0.6, 0.8}}}}}.dump();
  FixtureProvider p(root);
  EXPECT_EQ(kind_of([&] { p.embed_text("clock", {"other", ImageRole::kOrigin, {}}); }),
            ErrorKind::kSchemaViolation);
}

TEST(FixtureProvider, BundledFixturesLoad) {
  FixtureProvider p(testing::fixtures_dir() / "provider");
  EXPECT_EQ(p.capabilities().embed_dim, 512);
  const auto e = p.embed_text("clock", {"perfect_replace", ImageRole::kOrigin, {}});
  EXPECT_EQ(e.dim(), 512u);
  EXPECT_LE(e.norm(), 1.0 + 1e-6);
}

TEST(EmbeddingGuard, NormAndDimensionChecks) {
  EmbeddingGuard g;
  EXPECT_NO_THROW(g.check({{0.6, 0.8}}));
  EXPECT_EQ(g.dim(), 2u);
  EXPECT_NO_THROW(g.check({{0.1, 0.1}}));
  EXPECT_EQ(kind_of([&] { g.check({{0.6, 0.8, 0.0}}); }), ErrorKind::kSchemaViolation);
  EXPECT_EQ(kind_of([&] { g.check({{0.0, 0.0}}); }), ErrorKind::kSchemaViolation);
  EXPECT_EQ(kind_of([&] { g.check({{1.0, 0.1}}); }), ErrorKind::kSchemaViolation);
  EXPECT_EQ(kind_of([&] { g.check({{std::nan(""), 0.1}}); }), ErrorKind::kSchemaViolation);
  EXPECT_EQ(kind_of([&] { g.check({}); }), ErrorKind::kSchemaViolation);
  EmbeddingGuard pinned(3);
  EXPECT_EQ(kind_of([&] { pinned.check({{0.6, 0.8}}); }), ErrorKind::kSchemaViolation);
}

TEST(ProviderJson, DetectionSchema) {
  const auto d = detection_from_json(json{{"bbox", {1, 2, 3, 4}}, {"confidence", 0.5}});
  EXPECT_EQ(d.bbox, BBox::make(1, 2, 3, 4));
  EXPECT_EQ(kind_of([] { detection_from_json(json{{"bbox", {1, 2, 3, 4}}, {"confidence", 1.5}}); }),
            ErrorKind::kSchemaViolation);
  EXPECT_EQ(kind_of([] { detection_from_json(json{{"bbox", {3, 2, 1, 4}}, {"confidence", 0.5}}); }),
            ErrorKind::kSchemaViolation);
  EXPECT_EQ(kind_of([] { detection_from_json(json{{"bbox", {1, 2, 3}}, {"confidence", 0.5}}); }),
            ErrorKind::kSchemaViolation);
}

TEST(ProviderJson, CapabilitiesRoundTrip) {
  ProviderCapabilities c;
  c.embed_dim = 768;
  c.supports_parse = false;
  c.version = "x";
  const auto r = capabilities_from_json(to_json(c));
  EXPECT_EQ(r.embed_dim, 768);
  EXPECT_FALSE(r.supports_parse);
  EXPECT_EQ(r.version, "x");
  EXPECT_EQ(kind_of([] { capabilities_from_json(json{{"embed_dim", 0}}); }),
            ErrorKind::kSchemaViolation);
}

TEST(ProviderJson, QuantizedBoxKey) {
  EXPECT_EQ(quantized_box_key(BBox::make(0.4, 1.5, 9.6, 10.49)), "0,2,10,10");
}

}  // namespace
}  // namespace bpm
