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

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>

#include "bpm/http_provider.hpp"
#include "test_util.hpp"

namespace bpm {
namespace {

using nlohmann::json;

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidArgument;
}

// Mock sidecar on an ephemeral localhost port.
class MockSidecar {
 public:
  MockSidecar() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockSidecar() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpProviderOptions fast_options(const std::string& url) {
  HttpProviderOptions o;
  o.base_url = url;
  o.initial_backoff = std::chrono::milliseconds(5);
  o.request_timeout = std::chrono::milliseconds(2000);
  o.deadline = std::chrono::milliseconds(5000);
  return o;
}

void reply(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

void serve_capabilities(httplib::Server& s, int dim = 2) {
  s.Get("/v1/capabilities", [dim](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"embed_dim", dim}, {"version", "mock"}});
  });
}

const RequestContext kCtx{"s", ImageRole::kOrigin, std::nullopt};

TEST(HttpProvider, FullProtocolRoundTrip) {
  MockSidecar mock;
  std::atomic<int> auth_ok{0};
  auto& s = mock.server();
  serve_capabilities(s);
  s.Post("/v1/parse", [&](const httplib::Request& req, httplib::Response& res) {
    if (req.get_header_value("Authorization") == "Bearer secret") ++auth_ok;
    const auto body = json::parse(req.body);
    EXPECT_EQ(body.at("instruction"), "remove the clock");
    reply(res, {{"source_object", "clock"}, {"target_object", nullptr},
                {"pos_st", "unchanged"}, {"size_st", "unchanged"}});
  });
  s.Post("/v1/detect", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    const auto img = decode_png_rgb(base64_decode(body.at("image_png_b64").get<std::string>()));
    EXPECT_EQ(img.dims(), (ImageDims{6, 4}));
    EXPECT_EQ(body.at("query"), "clock");
    reply(res, {{"detections", {{{"bbox", {1, 1, 3, 3}}, {"confidence", 0.7}, {"label", "clock"}}}}});
  });
  s.Post("/v1/segment", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    EXPECT_EQ(body.at("bbox"), json({1, 1, 3, 3}));
    BinaryMask m(3, 2);  // smaller than the image; the client resizes
    m.set(0, 0, true);
    reply(res, {{"mask_png_b64", base64_encode(encode_png_mask(m))}});
  });
  s.Post("/v1/embed/image", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"vector", {0.6, 0.8}}});
  });
  s.Post("/v1/embed/text", [&](const httplib::Request& req, httplib::Response& res) {
    EXPECT_EQ(json::parse(req.body).at("text"), "clock");
    reply(res, {{"vector", {1.0, 0.0}}});
  });

  auto opts = fast_options(mock.url());
  opts.bearer_token = "secret";
  HttpProvider p(opts);
  EXPECT_EQ(p.capabilities().embed_dim, 2);
  EXPECT_EQ(p.parse("remove the clock", kCtx).edit_case(), EditCase::kRemove);
  EXPECT_EQ(auth_ok.load(), 1);
  const RasterImage img(6, 4, 0.5);
  const auto d = p.detect(img, "clock", kCtx);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].bbox, BBox::make(1, 1, 3, 3));
  const auto m = p.segment(img, d[0].bbox, kCtx);
  EXPECT_EQ(m.dims(), img.dims());
  EXPECT_EQ(mask_area(m), 4);
  EXPECT_EQ(p.embed_image(img, kCtx).values, (std::vector<double>{0.6, 0.8}));
  EXPECT_EQ(p.embed_text("clock", kCtx).values, (std::vector<double>{1.0, 0.0}));
}

TEST(HttpProvider, RetriesServerErrorsThenSucceeds) {
  MockSidecar mock;
  std::atomic<int> calls{0};
  serve_capabilities(mock.server());
  mock.server().Post("/v1/embed/text", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) return reply(res, {{"error", "busy"}}, 503);
    reply(res, {{"vector", {0.0, 1.0}}});
  });
  HttpProvider p(fast_options(mock.url()));
  EXPECT_EQ(p.embed_text("x", kCtx).values, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpProvider, ExhaustedRetriesAreUnavailable) {
  MockSidecar mock;
  std::atomic<int> calls{0};
  mock.server().Post("/v1/parse", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    reply(res, {{"error", "down"}}, 500);
  });
  auto opts = fast_options(mock.url());
  opts.max_retries = 2;
  HttpProvider p(opts);
  EXPECT_EQ(kind_of([&] { p.parse("x", kCtx); }), ErrorKind::kProviderUnavailable);
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpProvider, ClientErrorsAreNotRetried) {
  MockSidecar mock;
  std::atomic<int> calls{0};
  mock.server().Post("/v1/parse", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    reply(res, {{"error", "bad"}}, 422);
  });
  HttpProvider p(fast_options(mock.url()));
  EXPECT_EQ(kind_of([&] { p.parse("x", kCtx); }), ErrorKind::kSchemaViolation);
  EXPECT_EQ(calls.load(), 1);
}

TEST(HttpProvider, MalformedResponses) {
  MockSidecar mock;
  auto& s = mock.server();
  serve_capabilities(s, 2);
  s.Post("/v1/parse", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  s.Post("/v1/detect", [](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"boxes", json::array()}});
  });
  s.Post("/v1/embed/text", [](const httplib::Request& req, httplib::Response& res) {
    const auto t = json::parse(req.body).at("text").get<std::string>();
    if (t == "long") return reply(res, {{"vector", {1.0, 1.0}}});
    reply(res, {{"vector", {0.6, 0.0, 0.8}}});
  });
  HttpProvider p(fast_options(mock.url()));
  EXPECT_EQ(kind_of([&] { p.parse("x", kCtx); }), ErrorKind::kSchemaViolation);
  EXPECT_EQ(kind_of([&] { p.detect(RasterImage(2, 2), "q", kCtx); }), ErrorKind::kSchemaViolation);
  EXPECT_EQ(kind_of([&] { p.embed_text("long", kCtx); }), ErrorKind::kSchemaViolation);
  EXPECT_EQ(kind_of([&] { p.embed_text("wrong-dim", kCtx); }), ErrorKind::kSchemaViolation);
}

TEST(HttpProvider, SidecarDownIsUnavailable) {
  // Grab a free port, then close it so nothing listens there.
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  auto opts = fast_options("http://127.0.0.1:" + std::to_string(port));
  opts.max_retries = 1;
  HttpProvider p(opts);
  EXPECT_EQ(kind_of([&] { p.capabilities(); }), ErrorKind::kProviderUnavailable);
}

TEST(HttpProvider, DeadlineBoundsRetries) {
  MockSidecar mock;
  mock.server().Post("/v1/parse", [](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"error", "busy"}}, 503);
  });
  auto opts = fast_options(mock.url());
  opts.max_retries = 100;
  opts.initial_backoff = std::chrono::milliseconds(50);
  opts.deadline = std::chrono::milliseconds(400);
  HttpProvider p(opts);
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_EQ(kind_of([&] { p.parse("x", kCtx); }), ErrorKind::kProviderUnavailable);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(1500));
}

TEST(HttpProvider, ConcurrentCallsAreSafe) {
  MockSidecar mock;
  serve_capabilities(mock.server(), 2);
  mock.server().Post("/v1/embed/text", [](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"vector", {0.6, 0.8}}});
  });
  HttpProvider p(fast_options(mock.url()));
  std::atomic<int> ok{0};
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 12; ++t)
      threads.emplace_back([&] {
        for (int i = 0; i < 5; ++i)
          if (p.embed_text("x", kCtx).dim() == 2) ++ok;
      });
  }
  EXPECT_EQ(ok.load(), 60);
}

TEST(HttpProvider, EmptyUrlRejected) {
  EXPECT_EQ(kind_of([] { HttpProvider p(HttpProviderOptions{}); }), ErrorKind::kInvalidArgument);
}

}  // namespace
}  // namespace bpm
