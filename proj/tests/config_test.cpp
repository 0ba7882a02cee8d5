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

#include <cstdlib>
#include <fstream>

#include "bpm/config.hpp"
#include "test_util.hpp"

namespace bpm {
namespace {

TEST(ProviderSpec, Parsing) {
  const auto f = parse_provider_spec("fixtures:/data/x");
  EXPECT_EQ(f.kind, ProviderKind::kFixtures);
  EXPECT_EQ(f.locator, "/data/x");
  EXPECT_EQ(f.str(), "fixtures:/data/x");
  const auto h = parse_provider_spec("http://127.0.0.1:9000");
  EXPECT_EQ(h.kind, ProviderKind::kHttp);
  EXPECT_EQ(h.str(), "http://127.0.0.1:9000");
  EXPECT_THROW(parse_provider_spec("ftp://x"), Error);
  EXPECT_THROW(parse_provider_spec(""), Error);
}

TEST(EngineConfig, DefaultsValidate) {
  EngineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.eval.alpha, 0.7);
  EXPECT_GE(cfg.jobs, 1u);
}

TEST(EngineConfig, ValidateRejects) {
  EngineConfig cfg;
  cfg.eval.alpha = 1.5;
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAlphaOutOfRange);
  }
  cfg = {};
  cfg.eval.judge.iou_tau = 2.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.jobs = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.eval.localizer.det_floor = -0.1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(EngineConfig, JsonOverlay) {
  EngineConfig cfg;
  apply_json(cfg, nlohmann::json::parse(R"({
    "alpha": 0.5, "judge": {"iou_tau": 0.6}, "norm_mode": "fixed",
    "det_floor": 0.3, "jobs": 3, "provider": "fixtures:p",
    "http": {"max_retries": 1, "bearer_token": "s3cret"}})"));
  EXPECT_EQ(cfg.eval.alpha, 0.5);
  EXPECT_EQ(cfg.eval.judge.iou_tau, 0.6);
  EXPECT_EQ(cfg.eval.judge.ortho_eps, 0.1);  // untouched
  EXPECT_EQ(cfg.eval.norm_mode, NormMode::kFixed);
  EXPECT_EQ(cfg.eval.localizer.det_floor, 0.3);
  EXPECT_EQ(cfg.jobs, 3u);
  EXPECT_EQ(cfg.provider->str(), "fixtures:p");
  EXPECT_EQ(cfg.http_max_retries, 1);
  EXPECT_EQ(cfg.bearer_token, "s3cret");
  EXPECT_THROW(apply_json(cfg, nlohmann::json::parse(R"({"norm_mode": "weird"})")), Error);
  EXPECT_THROW(apply_json(cfg, nlohmann::json::parse(R"({"alpha": "high"})")), Error);
}

TEST(EngineConfig, EchoRedactsToken) {
  EngineConfig cfg;
  auto j = to_json(cfg);
  EXPECT_TRUE(j.at("http").at("bearer_token").is_null());
  EXPECT_TRUE(j.at("provider").is_null());
  cfg.bearer_token = "s3cret";
  cfg.provider = parse_provider_spec("http://h:1");
  j = to_json(cfg);
  EXPECT_EQ(j.at("http").at("bearer_token"), "<redacted>");
  EXPECT_EQ(j.dump().find("s3cret"), std::string::npos);
  EXPECT_EQ(j.at("alpha"), 0.7);
  EXPECT_EQ(j.at("provider"), "http://h:1");
}

TEST(EngineConfig, Precedence) {
  const auto dir = testing::scratch_dir("config_precedence");
  std::ofstream(dir / "c.json") << R"({"provider": "fixtures:from_file", "alpha": 0.4})";
  ::setenv("BPM_PROVIDER_URL", "http://from-env:1", 1);
  EngineConfig cfg;
  apply_env(cfg);
  EXPECT_EQ(cfg.provider->str(), "http://from-env:1");
  apply_config_file(cfg, dir / "c.json");
  EXPECT_EQ(cfg.provider->str(), "fixtures:from_file");
  EXPECT_EQ(cfg.eval.alpha, 0.4);
  ::unsetenv("BPM_PROVIDER_URL");

  EngineConfig env_only;
  ::setenv("BPM_PROVIDER_URL", "", 1);
  apply_env(env_only);
  EXPECT_FALSE(env_only.provider);
  ::unsetenv("BPM_PROVIDER_URL");
}

TEST(EngineConfig, ConfigFileErrors) {
  const auto dir = testing::scratch_dir("config_errors");
  EngineConfig cfg;
  EXPECT_THROW(apply_config_file(cfg, dir / "missing.json"), Error);
  std::ofstream(dir / "list.json") << "[1,2]";
  EXPECT_THROW(apply_config_file(cfg, dir / "list.json"), Error);
}

TEST(MakeProvider, Kinds) {
  EngineConfig cfg;
  EXPECT_THROW(make_provider(cfg), Error);
  cfg.provider = parse_provider_spec("fixtures:" + (testing::fixtures_dir() / "provider").string());
  EXPECT_NE(dynamic_cast<FixtureProvider*>(make_provider(cfg).get()), nullptr);
  cfg.provider = parse_provider_spec("http://127.0.0.1:1");
  cfg.bearer_token = "t";
  cfg.http_max_retries = 0;
  auto p = make_provider(cfg);
  auto* http = dynamic_cast<HttpProvider*>(p.get());
  ASSERT_NE(http, nullptr);
  EXPECT_EQ(http->options().bearer_token, "t");
  EXPECT_EQ(http->options().max_retries, 0);
}

}  // namespace
}  // namespace bpm
