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

// Writes the bundled synthetic fixture set:
//
//   <out>/provider/       FixtureProvider root (parse, detections, masks, embeddings)
//   <out>/images/         scene PNGs
//   <out>/evaluate/       small end-to-end manifest covering the edit cases
//   <out>/alpha/          samples whose semantic and region scores are anti-correlated
//   <out>/gt/             ground-truth triplets (GT / noised original / unrelated image)
//   <out>/harness/        hand-countable alignment and favoring fixtures
//
// Usage: make_fixtures <out_dir> [--triplets N] [--embed-dim D]

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpm/bpm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_embed_dim = 512;
constexpr int kSize = 64;
constexpr double kSigma = 0.15;

using Vec = std::vector<double>;
using Color = std::array<double, 3>;

Vec random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec v(g_embed_dim);
  double s = 0.0;
  for (auto& x : v) {
    x = n(rng);
    s += x * x;
  }
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

Vec axpy(double a, const Vec& x, const Vec& y) {
  Vec out(y);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * x[i];
  return out;
}

Vec scaled_unit(const Vec& v, double length) {
  double s = 0.0;
  for (double x : v) s += x * x;
  Vec out(v);
  for (auto& x : out) x *= length / std::sqrt(s);
  return out;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::round(x * 1e7) / 1e7);
  return a;
}

// --------------------------------------------------------------------------
// Scenes
// --------------------------------------------------------------------------

bpm::RasterImage background(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> base(0.25, 0.55), grad(-0.12, 0.12),
      phase(0.0, 6.28);
  Color c{base(rng), base(rng), base(rng)};
  const double gx = grad(rng), gy = grad(rng), ph = phase(rng);
  bpm::RasterImage img(kSize, kSize);
  for (int y = 0; y < kSize; ++y)
    for (int x = 0; x < kSize; ++x)
      for (int k = 0; k < 3; ++k) {
        const double texture = 0.03 * std::sin(0.45 * x + 0.3 * y + ph + k);
        img.set(x, y, k, c[k] + gx * (x - kSize / 2.0) / kSize +
                             gy * (y - kSize / 2.0) / kSize + texture);
      }
  return img;
}

// Ellipse inscribed in `box`; returns its mask.
bpm::BinaryMask draw_object(bpm::RasterImage& img, const bpm::BBox& box, const Color& color) {
  bpm::BinaryMask m(img.width(), img.height());
  const auto c = bpm::bbox_center(box);
  const double rx = box.width() / 2, ry = box.height() / 2;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double dx = (x + 0.5 - c.x) / rx, dy = (y + 0.5 - c.y) / ry;
      if (dx * dx + dy * dy <= 1.0) {
        m.set(x, y, true);
        for (int k = 0; k < 3; ++k) img.set(x, y, k, color[k]);
      }
    }
  return m;
}

void paint_from(bpm::RasterImage& dst, const bpm::RasterImage& src, const bpm::BinaryMask& m) {
  for (int y = 0; y < dst.height(); ++y)
    for (int x = 0; x < dst.width(); ++x)
      if (m.at(x, y))
        for (int k = 0; k < 3; ++k) dst.set(x, y, k, src.at(x, y, k));
}

const std::vector<Color> kPalette = {
    {0.95, 0.08, 0.08}, {0.08, 0.9, 0.12}, {0.1, 0.15, 0.95}, {0.95, 0.9, 0.05},
    {0.9, 0.1, 0.9},    {0.05, 0.9, 0.9},  {0.98, 0.98, 0.98}, {0.02, 0.02, 0.02}};

const std::vector<std::string> kObjects = {"clock", "street sign", "apple", "banana",
                                           "cat",   "dog",         "car",   "boat",
                                           "vase",  "lamp",        "cup",   "book"};

// --------------------------------------------------------------------------
// Fixture sample writer
// --------------------------------------------------------------------------

struct Sample {
  std::string id;
  json parse;
  json detections = {{"origin", json::object()}, {"edited", json::object()}};
  json crops = json::object();
  std::map<std::string, bpm::BinaryMask> masks;
  std::map<std::string, int> mask_count;

  void detect(const std::string& role, const std::string& query) {
    if (!detections[role].contains(query)) detections[role][query] = json::array();
  }
  void detect(const std::string& role, const std::string& query, const bpm::BBox& box,
              double conf, const bpm::BinaryMask& mask) {
    detect(role, query);
    const int n = mask_count[role]++;
    detections[role][query].push_back(
        {{"bbox", bpm::to_json(box)}, {"confidence", conf}, {"label", query}, {"mask", n}});
    masks["mask_" + role + "_" + std::to_string(n) + ".png"] = mask;
  }
  // Low-confidence distractor below the default floor; never segmented.
  void weak_detect(const std::string& role, const std::string& query, const bpm::BBox& box) {
    detect(role, query);
    detections[role][query].push_back(
        {{"bbox", bpm::to_json(box)}, {"confidence", 0.12}, {"label", query}});
  }
  void crop(const std::string& role, const bpm::BBox& box, const Vec& v) {
    crops[role + ":" + bpm::quantized_box_key(box)] = vec_json(v);
  }

  void write(const fs::path& provider_root) const {
    const fs::path dir = provider_root / id;
    fs::create_directories(dir);
    std::ofstream(dir / "parse.json") << parse.dump(2) << "\n";
    std::ofstream(dir / "detections.json") << detections.dump(2) << "\n";
    std::ofstream(dir / "embeddings.json") << json{{"crop", crops}}.dump() << "\n";
    for (const auto& [name, m] : masks) bpm::save_mask(dir / name, m);
  }
};

struct World {
  fs::path out;
  std::map<std::string, Vec> text;

  fs::path provider() const { return out / "provider"; }
  fs::path images() const { return out / "images"; }

  const Vec& word(const std::string& w) const { return text.at(w); }

  // Text-direction unit vector from `src` to `tgt`.
  Vec direction(const std::string& src, const std::string& tgt) const {
    return scaled_unit(axpy(-1.0, word(src), word(tgt)), 1.0);
  }
};

bpm::ParsedInstruction must_parse(const std::string& instruction) {
  auto p = bpm::fallback_parse(instruction);
  if (!p) throw std::runtime_error("fixture instruction not parseable: " + instruction);
  return *p;
}

std::string rel(const fs::path& p, const fs::path& base) {
  return fs::relative(p, base).generic_string();
}

json manifest_line(const std::string& id, const fs::path& origin, const fs::path& edited,
                   const std::string& instruction, const std::string& model,
                   const fs::path& base) {
  return {{"id", id},
          {"original_path", rel(origin, base)},
          {"edited_path", rel(edited, base)},
          {"instruction", instruction},
          {"model_tag", model}};
}

// --------------------------------------------------------------------------
// Ground-truth triplets
// --------------------------------------------------------------------------

struct TripletScene {
  std::string id;
  std::string instruction;
  bpm::ParsedInstruction parsed;
  bpm::RasterImage origin, gt, em;
  Sample gt_fx, ep_fx, em_fx;
};

TripletScene make_triplet(const World& w, int t) {
  std::mt19937_64 rng(1000 + t);
  std::uniform_int_distribution<int> pick_obj(0, int(kObjects.size()) - 1);
  std::uniform_int_distribution<int> pick_col(0, int(kPalette.size()) - 1);
  std::uniform_int_distribution<int> jitter(-3, 3);

  TripletScene s;
  char buf[16];
  std::snprintf(buf, sizeof buf, "t%02d", t);
  s.id = buf;
  s.gt_fx.id = s.id + "_gt";
  s.ep_fx.id = s.id + "_ep";
  s.em_fx.id = s.id + "_em";

  std::string src = kObjects[pick_obj(rng)];
  std::string tgt;
  do tgt = kObjects[pick_obj(rng)]; while (tgt == src);
  const int ci = pick_col(rng);
  int cj;
  do cj = pick_col(rng); while (cj == ci);
  const Color src_col = kPalette[ci], tgt_col = kPalette[cj];

  s.origin = background(5000 + t);
  bpm::RasterImage unrelated = background(9000 + t);
  const bpm::BBox full = bpm::BBox::full_image({kSize, kSize});
  const auto content = [&](std::uint64_t salt) {
    std::mt19937_64 r(salt);
    return scaled_unit(random_unit(r), 0.5);
  };
  const Vec noise_dir = [&] { std::mt19937_64 r(77000 + t); return random_unit(r); }();
  const Vec em_dir = [&] { std::mt19937_64 r(88000 + t); return random_unit(r); }();

  const int kind = t % 5;
  if (kind <= 2) {
    // Replace in place.
    s.instruction = kind == 2 ? "change the " + src + " to a " + tgt
                              : "replace the " + src + " with a " + tgt;
    const int x0 = 16 + jitter(rng), y0 = 16 + jitter(rng);
    const auto box = bpm::BBox::make(x0, y0, x0 + 32, y0 + 32);
    const auto m_src = draw_object(s.origin, box, src_col);
    s.gt = s.origin;
    paint_from(s.gt, background(5000 + t), m_src);
    const auto m_tgt = draw_object(s.gt, box, tgt_col);

    const Vec e_o = axpy(0.3, content(3000 + t), scaled_unit(w.word(src), 0.3));
    const Vec e_gt = axpy(0.25, w.direction(src, tgt), e_o);
    for (Sample* fx : {&s.gt_fx, &s.ep_fx, &s.em_fx}) {
      fx->detect("origin", src, box, 0.88, m_src);
      fx->weak_detect("origin", src, box.translated(8, 8));
      fx->crop("origin", box, e_o);
    }
    s.gt_fx.detect("edited", tgt, box, 0.91, m_tgt);
    s.gt_fx.crop("edited", box, e_gt);

    s.ep_fx.detect("edited", tgt);  // nothing found
    s.ep_fx.crop("edited", full, axpy(0.02, noise_dir, content(4000 + t)));

    // Unrelated image: the target shows up elsewhere at a different scale.
    s.em = unrelated;
    const auto em_box = bpm::BBox::make(2, 40, 18, 58);
    const auto m_em = draw_object(s.em, em_box, tgt_col);
    s.em_fx.detect("edited", tgt, em_box, 0.8, m_em);
    s.em_fx.crop("edited", em_box,
                 axpy(0.2, scaled_unit(axpy(0.3, w.direction(src, tgt), em_dir), 1.0), e_o));
  } else if (kind == 3) {
    // Add relative to a reference object.
    std::string ref = src;
    const bool right = (t / 5) % 2 == 0;
    s.instruction = "add a " + tgt + (right ? " to the right of the " : " to the left of the ") + ref;
    const int y0 = 18 + jitter(rng);
    const auto ref_box = right ? bpm::BBox::make(3, y0, 27, y0 + 26)
                               : bpm::BBox::make(37, y0, 61, y0 + 26);
    const auto new_box = right ? bpm::BBox::make(31, y0 - 2, 63, y0 + 28)
                               : bpm::BBox::make(1, y0 - 2, 33, y0 + 28);
    const auto m_ref = draw_object(s.origin, ref_box, src_col);
    s.gt = s.origin;
    const auto m_new = draw_object(s.gt, new_box, tgt_col);

    const Vec e_o = axpy(0.3, content(3000 + t), scaled_unit(w.word("background"), 0.3));
    const Vec e_gt = axpy(0.25, w.direction("background", tgt), e_o);
    for (Sample* fx : {&s.gt_fx, &s.ep_fx, &s.em_fx}) fx->detect("edited", ref);
    s.gt_fx.detect("edited", tgt, new_box, 0.9, m_new);
    s.gt_fx.detect("edited", ref, ref_box, 0.85, m_ref);
    s.gt_fx.crop("origin", new_box, e_o);
    s.gt_fx.crop("edited", new_box, e_gt);

    s.ep_fx.detect("edited", tgt);
    s.ep_fx.detect("edited", ref, ref_box, 0.85, m_ref);
    s.ep_fx.crop("origin", full, content(4000 + t));
    s.ep_fx.crop("edited", full, axpy(0.02, noise_dir, content(4000 + t)));

    // Unrelated image, target on the wrong side of the reference.
    s.em = unrelated;
    const auto em_ref = right ? bpm::BBox::make(34, 6, 58, 30) : bpm::BBox::make(4, 6, 28, 30);
    const auto em_new = right ? bpm::BBox::make(4, 36, 24, 56) : bpm::BBox::make(40, 36, 60, 56);
    const auto m_em_ref = draw_object(s.em, em_ref, src_col);
    const auto m_em_new = draw_object(s.em, em_new, tgt_col);
    s.em_fx.detect("edited", tgt, em_new, 0.8, m_em_new);
    s.em_fx.detect("edited", ref, em_ref, 0.8, m_em_ref);
    const Vec e_em_o = axpy(0.3, content(3100 + t), scaled_unit(w.word("background"), 0.3));
    s.em_fx.crop("origin", em_new, e_em_o);
    s.em_fx.crop("edited", em_new,
                 axpy(0.2, scaled_unit(axpy(0.3, w.direction("background", tgt), em_dir), 1.0),
                      e_em_o));
  } else {
    // Remove.
    s.instruction = "remove the " + src;
    const int x0 = 14 + jitter(rng), y0 = 14 + jitter(rng);
    const auto box = bpm::BBox::make(x0, y0, x0 + 34, y0 + 34);
    const auto m_src = draw_object(s.origin, box, src_col);
    s.gt = s.origin;
    paint_from(s.gt, background(5000 + t), m_src);

    const Vec e_o = axpy(0.3, content(3000 + t), scaled_unit(w.word(src), 0.3));
    for (Sample* fx : {&s.gt_fx, &s.ep_fx, &s.em_fx}) {
      fx->detect("origin", src, box, 0.87, m_src);
      fx->crop("origin", box, e_o);
    }
    s.gt_fx.crop("edited", box, axpy(0.25, w.direction(src, "background"), e_o));
    s.ep_fx.crop("edited", box, axpy(0.02, noise_dir, e_o));
    s.em = unrelated;
    draw_object(s.em, bpm::BBox::make(36, 4, 60, 28), tgt_col);
    s.em_fx.crop("edited", box, axpy(0.25, em_dir, e_o));
  }
  s.parsed = must_parse(s.instruction);
  for (Sample* fx : {&s.gt_fx, &s.ep_fx, &s.em_fx}) fx->parse = bpm::to_json(s.parsed);
  return s;
}

void write_gt(const World& w, int n) {
  const fs::path gt_dir = w.out / "gt";
  const fs::path distractors = gt_dir / "distractors";
  fs::create_directories(distractors);
  std::vector<bpm::SampleManifestEntry> manifest;
  std::vector<TripletScene> scenes;
  for (int t = 0; t < n; ++t) {
    auto s = make_triplet(w, t);
    const auto origin_path = w.images() / (s.id + "_origin.png");
    const auto gt_path = w.images() / (s.id + "_gt.png");
    bpm::save_image(origin_path, s.origin);
    bpm::save_image(gt_path, s.gt);
    bpm::save_image(distractors / (s.id + ".png"), s.em);
    manifest.push_back({s.id, origin_path, gt_path, s.instruction, "gt", std::nullopt});
    for (const Sample* fx : {&s.gt_fx, &s.ep_fx, &s.em_fx}) fx->write(w.provider());
    scenes.push_back(std::move(s));
  }
  const auto triplets =
      bpm::build_gt_triplets(manifest, kSigma, /*seed=*/20250101, distractors, gt_dir / "ep");
  std::ofstream out(gt_dir / "triplets.jsonl");
  for (auto t : triplets) {
    json j = bpm::to_json(t);
    j["original_path"] = rel(t.original_path, gt_dir);
    j["gt_path"] = rel(t.gt_path, gt_dir);
    j["over_preserved_path"] = rel(t.over_preserved_path, gt_dir);
    j["over_modified_path"] = rel(t.over_modified_path, gt_dir);
    out << j.dump() << "\n";
  }
  // Same entries as a plain manifest, for `gt-test --build`.
  std::ofstream m(gt_dir / "manifest.jsonl");
  for (const auto& e : manifest)
    m << manifest_line(e.id, e.original_path, e.edited_path, e.instruction, "gt", gt_dir).dump()
      << "\n";
}

// --------------------------------------------------------------------------
// End-to-end evaluate set
// --------------------------------------------------------------------------

struct EvalCase {
  std::string id;
  std::string instruction;
  bpm::RasterImage origin, edited;
  Sample fx;
};

std::vector<EvalCase> make_eval_cases(const World& w) {
  std::vector<EvalCase> cases;
  const bpm::BBox full = bpm::BBox::full_image({kSize, kSize});
  auto unit = [](std::uint64_t seed, double len) {
    std::mt19937_64 r(seed);
    return scaled_unit(random_unit(r), len);
  };
  const Color red = kPalette[0], blue = kPalette[2], yellow = kPalette[3];

  {  // Perfect replacement.
    EvalCase c{"perfect_replace", "replace the clock with a street sign", background(11), {}, {}};
    const auto box = bpm::BBox::make(20, 18, 46, 44);
    const auto m0 = draw_object(c.origin, box, red);
    c.edited = c.origin;
    paint_from(c.edited, background(11), m0);
    const auto m1 = draw_object(c.edited, box, blue);
    const Vec e_o = unit(101, 0.5);
    c.fx.detect("origin", "clock", box, 0.9, m0);
    c.fx.detect("edited", "street sign", box, 0.4, m1);
    c.fx.detect("edited", "street sign", box.translated(-1, 0), 0.9, m1);
    c.fx.crop("origin", box, e_o);
    c.fx.crop("edited", box.translated(-1, 0), axpy(0.25, w.direction("clock", "street sign"), e_o));
    cases.push_back(std::move(c));
  }
  {  // Target never appears.
    EvalCase c{"target_absent", "replace the clock with a street sign", background(12), {}, {}};
    const auto box = bpm::BBox::make(20, 18, 46, 44);
    const auto m0 = draw_object(c.origin, box, red);
    c.edited = c.origin;
    paint_from(c.edited, background(12), m0);
    c.fx.detect("origin", "clock", box, 0.9, m0);
    c.fx.detect("edited", "street sign");
    c.fx.crop("origin", box, unit(102, 0.5));
    c.fx.crop("edited", full, unit(103, 0.5));
    cases.push_back(std::move(c));
  }
  {  // Editor returned the input unchanged; the detector misfires on the clock.
    EvalCase c{"identical_images", "replace the clock with a street sign", background(13), {}, {}};
    const auto box = bpm::BBox::make(20, 18, 46, 44);
    const auto m0 = draw_object(c.origin, box, red);
    c.edited = c.origin;
    const Vec e = unit(104, 0.5);
    c.fx.detect("origin", "clock", box, 0.9, m0);
    c.fx.detect("edited", "street sign", box, 0.3, m0);
    c.fx.crop("origin", box, e);
    c.fx.crop("edited", box, e);
    cases.push_back(std::move(c));
  }
  {  // Add next to a reference object.
    EvalCase c{"add_relation", "add an apple to the right of banana", background(14), {}, {}};
    const auto ref = bpm::BBox::make(4, 20, 28, 44);
    const auto add = bpm::BBox::make(36, 20, 60, 44);
    const auto mref = draw_object(c.origin, ref, yellow);
    c.edited = c.origin;
    const auto madd = draw_object(c.edited, add, red);
    const Vec e_o = unit(105, 0.5);
    c.fx.detect("edited", "apple", add, 0.92, madd);
    c.fx.detect("edited", "banana", ref, 0.8, mref);
    c.fx.crop("origin", add, e_o);
    c.fx.crop("edited", add, axpy(0.25, w.direction("background", "apple"), e_o));
    cases.push_back(std::move(c));
  }
  {  // Removal.
    EvalCase c{"remove_clock", "remove the clock", background(15), {}, {}};
    const auto box = bpm::BBox::make(18, 16, 48, 46);
    const auto m0 = draw_object(c.origin, box, red);
    c.edited = c.origin;
    paint_from(c.edited, background(15), m0);
    const Vec e_o = unit(106, 0.5);
    c.fx.detect("origin", "clock", box, 0.9, m0);
    c.fx.crop("origin", box, e_o);
    c.fx.crop("edited", box, axpy(0.25, w.direction("clock", "background"), e_o));
    cases.push_back(std::move(c));
  }
  {  // Correct move to the left; same object so the text direction vanishes.
    EvalCase c{"move_left", "move the cat to the left", background(16), {}, {}};
    const auto from = bpm::BBox::make(34, 20, 58, 44);
    const auto to = bpm::BBox::make(4, 21, 28, 45);
    const auto m0 = draw_object(c.origin, from, blue);
    c.edited = c.origin;
    paint_from(c.edited, background(16), m0);
    const auto m1 = draw_object(c.edited, to, blue);
    c.fx.detect("origin", "cat", from, 0.9, m0);
    c.fx.detect("edited", "cat", to, 0.9, m1);
    c.fx.crop("origin", from, unit(107, 0.5));
    c.fx.crop("edited", to, unit(108, 0.5));
    cases.push_back(std::move(c));
  }
  {  // Wrong direction.
    EvalCase c{"move_wrong_way", "move the dog to the right", background(17), {}, {}};
    const auto from = bpm::BBox::make(34, 20, 58, 44);
    const auto to = bpm::BBox::make(4, 20, 28, 44);
    const auto m0 = draw_object(c.origin, from, yellow);
    c.edited = c.origin;
    paint_from(c.edited, background(17), m0);
    const auto m1 = draw_object(c.edited, to, yellow);
    c.fx.detect("origin", "dog", from, 0.9, m0);
    c.fx.detect("edited", "dog", to, 0.9, m1);
    c.fx.crop("origin", from, unit(109, 0.5));
    c.fx.crop("edited", to, unit(110, 0.5));
    cases.push_back(std::move(c));
  }
  {  // Enlarge 20x20 -> 24x24: area ratio 1.44, IoU 0.69.
    EvalCase c{"make_bigger", "make the apple bigger", background(18), {}, {}};
    const auto from = bpm::BBox::make(22, 22, 42, 42);
    const auto to = bpm::BBox::make(20, 20, 44, 44);
    const auto m0 = draw_object(c.origin, from, red);
    c.edited = c.origin;
    const auto m1 = draw_object(c.edited, to, red);
    c.fx.detect("origin", "apple", from, 0.9, m0);
    c.fx.detect("edited", "apple", to, 0.9, m1);
    c.fx.crop("origin", from, unit(111, 0.5));
    c.fx.crop("edited", to, unit(112, 0.5));
    cases.push_back(std::move(c));
  }
  {  // Only the instruction text is unsupported by the grammar fixtures; the
     // provider still answers from parse.json.
    EvalCase c{"source_missing", "replace the vase with a lamp", background(19), {}, {}};
    const auto box = bpm::BBox::make(20, 20, 44, 44);
    c.edited = c.origin;
    const auto m1 = draw_object(c.edited, box, blue);
    c.fx.detect("origin", "vase");
    c.fx.detect("edited", "lamp", box, 0.9, m1);
    c.fx.crop("origin", full, unit(113, 0.5));
    c.fx.crop("edited", box, unit(114, 0.5));
    cases.push_back(std::move(c));
  }
  for (auto& c : cases) {
    c.fx.id = c.id;
    c.fx.parse = bpm::to_json(must_parse(c.instruction));
  }
  return cases;
}

void write_eval_set(const World& w, const std::string& subdir, std::vector<EvalCase> cases) {
  const fs::path dir = w.out / subdir;
  fs::create_directories(dir);
  std::ofstream m(dir / "manifest.jsonl");
  for (auto& c : cases) {
    const auto o = w.images() / (c.id + "_origin.png");
    const auto e = w.images() / (c.id + "_edited.png");
    bpm::save_image(o, c.origin);
    bpm::save_image(e, c.edited);
    c.fx.write(w.provider());
    m << manifest_line(c.id, o, e, c.instruction, subdir, dir).dump() << "\n";
  }
}

// Two samples with strong semantics but failed regions and two with the
// reverse.
std::vector<EvalCase> make_alpha_cases(const World& w) {
  std::vector<EvalCase> cases;
  auto unit = [](std::uint64_t seed, double len) {
    std::mt19937_64 r(seed);
    return scaled_unit(random_unit(r), len);
  };
  for (int k = 0; k < 2; ++k) {
    // Right object, wrong place and scale; everything else untouched.
    EvalCase c{"alpha_semantic_" + std::to_string(k), "replace the cup with a book",
               background(200 + k), {}, {}};
    const auto box = bpm::BBox::make(8, 8, 32, 32);
    const auto far = bpm::BBox::make(44, 44, 58, 58);
    const auto m0 = draw_object(c.origin, box, kPalette[1]);
    c.edited = c.origin;
    paint_from(c.edited, background(200 + k), m0);
    const auto m1 = draw_object(c.edited, far, kPalette[4]);
    const Vec e_o = unit(300 + k, 0.5);
    c.fx.detect("origin", "cup", box, 0.9, m0);
    c.fx.detect("edited", "book", far, 0.9, m1);
    c.fx.crop("origin", box, e_o);
    c.fx.crop("edited", far, axpy(0.25, w.direction("cup", "book"), e_o));
    cases.push_back(std::move(c));
  }
  for (int k = 0; k < 2; ++k) {
    // Right place and size, wrong semantics, background heavily disturbed.
    EvalCase c{"alpha_region_" + std::to_string(k), "replace the cup with a book",
               background(210 + k), {}, {}};
    const auto box = bpm::BBox::make(16, 16, 44, 44);
    const auto m0 = draw_object(c.origin, box, kPalette[1]);
    c.edited = bpm::add_gaussian_noise(c.origin, 0.3, 400 + k);
    const auto m1 = draw_object(c.edited, box, kPalette[1]);
    const Vec e_o = unit(310 + k, 0.5);
    c.fx.detect("origin", "cup", box, 0.9, m0);
    c.fx.detect("edited", "book", box, 0.9, m1);
    c.fx.crop("origin", box, e_o);
    c.fx.crop("edited", box, axpy(-0.25, w.direction("cup", "book"), e_o));
    cases.push_back(std::move(c));
  }
  for (auto& c : cases) {
    c.fx.id = c.id;
    c.fx.parse = bpm::to_json(must_parse(c.instruction));
  }
  return cases;
}

// --------------------------------------------------------------------------
// Harness fixtures (hand-countable)
// --------------------------------------------------------------------------

void write_harness(const World& w) {
  const fs::path dir = w.out / "harness";
  fs::create_directories(dir);
  // Ten pairs; metric and human agree on all but p04 and p08.
  const std::vector<std::tuple<double, double, int, int>> pairs = {
      {1.40, 1.10, 4, 2}, {0.90, 1.20, 2, 5}, {1.75, 1.00, 5, 3}, {1.10, 1.30, 4, 3},
      {0.60, 1.50, 1, 4}, {1.20, 0.80, 3, 2}, {1.00, 1.60, 2, 4}, {1.30, 0.70, 2, 4},
      {1.90, 1.20, 5, 1}, {0.50, 0.95, 3, 5}};
  std::ofstream a(dir / "scores_a.jsonl"), b(dir / "scores_b.jsonl"), h(dir / "human.jsonl");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "p%02zu", i + 1);
    const auto [ma, mb, ha, hb] = pairs[i];
    a << json{{"bpm_schema", 1}, {"sample_id", id}, {"model_tag", "model_a"}, {"bpm", ma}}.dump() << "\n";
    b << json{{"bpm_schema", 1}, {"sample_id", id}, {"model_tag", "model_b"}, {"bpm", mb}}.dump() << "\n";
    h << json{{"id", id}, {"model_tag", "model_a"}, {"human", {{"overall", ha}}}}.dump() << "\n";
    h << json{{"id", id}, {"model_tag", "model_b"}, {"human", {{"overall", hb}}}}.dump() << "\n";
  }
  // Ten triplets: the noised original wins t01..t05, the ground truth t06..t10.
  std::ofstream t(dir / "triplet_scores.jsonl");
  for (int i = 1; i <= 10; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "t%02d", i);
    const bool ep_wins = i <= 5;
    t << json{{"id", id},
              {"gt", ep_wins ? 1.1 : 1.6},
              {"over_preserved", ep_wins ? 1.4 : 1.2},
              {"over_modified", 0.5 + 0.05 * i}}
             .dump()
      << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_fixtures <out_dir> [--triplets N] [--embed-dim D]\n";
    return 2;
  }
  int triplets = 50;
  for (int i = 2; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--triplets") triplets = std::stoi(argv[i + 1]);
    else if (flag == "--embed-dim") g_embed_dim = std::stoi(argv[i + 1]);
  }
  try {
    World w;
    w.out = fs::absolute(argv[1]);
    for (const char* sub : {"provider", "images", "evaluate", "alpha", "gt", "harness"})
      fs::remove_all(w.out / sub);
    fs::create_directories(w.provider());
    fs::create_directories(w.images());

    std::vector<std::string> vocab = kObjects;
    vocab.push_back("background");
    json text = json::object();
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      std::mt19937_64 rng(7 + i);
      w.text[vocab[i]] = scaled_unit(random_unit(rng), 0.999);
      text[vocab[i]] = vec_json(w.text[vocab[i]]);
    }
    std::ofstream(w.provider() / "embeddings.json") << json{{"text", text}}.dump() << "\n";
    bpm::ProviderCapabilities caps;
    caps.embed_dim = g_embed_dim;
    caps.version = "synthetic-fixtures-1";
    std::ofstream(w.provider() / "capabilities.json") << bpm::to_json(caps).dump(2) << "\n";

    write_eval_set(w, "evaluate", make_eval_cases(w));
    write_eval_set(w, "alpha", make_alpha_cases(w));
    write_gt(w, triplets);
    write_harness(w);
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
