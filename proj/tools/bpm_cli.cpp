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

// bpm: command-line front end.
//
// Precedence for every setting: flags > --config file > BPM_PROVIDER_URL.
// Exit codes: 0 ok, 1 some samples degraded, 2 fatal.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bpm/bpm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDegraded = 1;
constexpr int kExitFatal = 2;

struct GlobalFlags {
  std::string config;
  std::string provider;
  double alpha = bpm::kDefaultAlpha;
  std::string norm_mode;
  double iou_tau = 0.5, ortho_eps = 0.1, size_delta = 0.1, det_floor = 0.25;
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  std::string ties = "exclude";
};

struct Opts {
  CLI::Option* provider = nullptr;
  CLI::Option* alpha = nullptr;
  CLI::Option* norm_mode = nullptr;
  CLI::Option* iou_tau = nullptr;
  CLI::Option* ortho_eps = nullptr;
  CLI::Option* size_delta = nullptr;
  CLI::Option* det_floor = nullptr;
  CLI::Option* jobs = nullptr;
};

bpm::EngineConfig resolve_config(const GlobalFlags& g, const Opts& o) {
  bpm::EngineConfig cfg;
  bpm::apply_env(cfg);
  if (!g.config.empty()) bpm::apply_config_file(cfg, g.config);
  if (o.provider->count()) cfg.provider = bpm::parse_provider_spec(g.provider);
  if (o.alpha->count()) cfg.eval.alpha = g.alpha;
  if (o.norm_mode->count()) {
    cfg.eval.norm_mode = g.norm_mode == "fixed" ? bpm::NormMode::kFixed : bpm::NormMode::kBatch;
  }
  if (o.iou_tau->count()) cfg.eval.judge.iou_tau = g.iou_tau;
  if (o.ortho_eps->count()) cfg.eval.judge.ortho_eps = g.ortho_eps;
  if (o.size_delta->count()) cfg.eval.judge.size_delta = g.size_delta;
  if (o.det_floor->count()) cfg.eval.localizer.det_floor = g.det_floor;
  if (o.jobs->count()) cfg.jobs = g.jobs;
  cfg.validate();
  return cfg;
}

bpm::TiePolicy tie_policy(const std::string& s) {
  return s == "count-as-disagreement" ? bpm::TiePolicy::kCountAsDisagreement
                                      : bpm::TiePolicy::kExclude;
}

// Provider reachability is checked before any work starts.
std::unique_ptr<bpm::PerceptionProvider> open_provider(const bpm::EngineConfig& cfg) {
  auto p = bpm::make_provider(cfg);
  (void)p->capabilities();
  return p;
}

bool degraded(const std::vector<bpm::ScoreBreakdown>& scores) {
  for (const auto& s : scores)
    if (s.failed() || !s.flags.empty()) return true;
  return false;
}

void stamp(std::vector<bpm::ScoreBreakdown>& scores, const bpm::EngineConfig& cfg) {
  const json echo = bpm::to_json(cfg);
  for (auto& s : scores) s.config_echo = echo;
}

std::string first_model_tag(const fs::path& scores) {
  std::ifstream in(scores);
  std::string line;
  while (std::getline(in, line)) {
    auto j = json::parse(line, nullptr, false);
    if (j.is_object()) return j.value("model_tag", std::string{});
  }
  return {};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const bpm::EngineConfig& cfg, const fs::path& manifest_path,
                 const fs::path& out) {
  const auto manifest = bpm::load_manifest(manifest_path);
  const auto provider = open_provider(cfg);
  auto scores = bpm::evaluate_manifest(manifest, *provider, cfg.eval, cfg.jobs);
  stamp(scores, cfg);
  bpm::write_scores_jsonl(out, scores);
  std::size_t failed = 0;
  for (const auto& s : scores) failed += s.failed();
  std::cerr << "evaluated " << scores.size() << " samples (" << failed << " failed) -> "
            << out.string() << "\n";
  return degraded(scores) ? kExitDegraded : kExitOk;
}

int cmd_align(const GlobalFlags& g, const fs::path& a, const fs::path& b, const fs::path& human,
              std::string model_a, std::string model_b, const std::string& field,
              const std::string& component) {
  if (model_a.empty()) model_a = first_model_tag(a);
  if (model_b.empty()) model_b = first_model_tag(b);
  if (model_a == model_b) {
    throw bpm::Error(bpm::ErrorKind::kInvalidArgument,
                     "cannot tell the two models apart; pass --model-a/--model-b");
  }
  const auto table = bpm::load_human_annotations(human);
  const auto r = bpm::pairwise_alignment(
      bpm::read_metric_values(a, field), bpm::read_metric_values(b, field),
      bpm::human_values(table, model_a, component), bpm::human_values(table, model_b, component),
      tie_policy(g.ties));
  std::cout << fmt(r.ratio()) << "\n";
  std::cerr << model_a << " vs " << model_b << ": " << r.agreements << "/" << r.compared
            << " agreements, " << r.human_ties << " human ties (" << bpm::to_string(r.tie_policy)
            << ")\n";
  return kExitOk;
}

void print_favoring(const std::string& label, const bpm::GtFavoring& f) {
  std::cout << label << " EP=" << fmt(f.p_ep()) << " EM=" << fmt(f.p_em())
            << " GT=" << fmt(f.p_gt()) << "\n";
}

int cmd_gt_test(const GlobalFlags& g, const bpm::EngineConfig& cfg, const std::string& scores,
                const std::string& triplets, const std::string& build_manifest,
                const std::string& distractors, const std::string& out_dir, double sigma,
                const std::string& out) {
  if (!scores.empty()) {
    const auto ts = bpm::read_triplet_scores(scores);
    print_favoring("bpm", bpm::gt_favoring(ts));
    return kExitOk;
  }
  if (!build_manifest.empty()) {
    if (distractors.empty() || out_dir.empty()) {
      throw bpm::Error(bpm::ErrorKind::kInvalidArgument, "--build needs --distractors and --out-dir");
    }
    const auto manifest = bpm::load_manifest(build_manifest);
    const auto built = bpm::build_gt_triplets(manifest, sigma, g.seed, distractors, out_dir);
    const fs::path path = fs::path(out_dir) / "triplets.jsonl";
    std::ofstream f(path, std::ios::trunc);
    for (const auto& t : built) f << bpm::to_json(t).dump() << "\n";
    std::cerr << "wrote " << built.size() << " triplets -> " << path.string() << "\n";
    return kExitOk;
  }
  if (triplets.empty()) {
    throw bpm::Error(bpm::ErrorKind::kInvalidArgument,
                     "gt-test needs --triplets, --scores or --build");
  }
  const auto ts = bpm::load_triplets(triplets);
  const auto provider = open_provider(cfg);
  auto result = bpm::evaluate_triplets(ts, *provider, cfg.eval, cfg.jobs);
  stamp(result.breakdowns, cfg);
  if (!out.empty()) bpm::write_scores_jsonl(out, result.breakdowns);
  print_favoring("bpm", bpm::gt_favoring(result.bpm));
  print_favoring("preservation_only", bpm::gt_favoring(result.preservation_only));
  return degraded(result.breakdowns) ? kExitDegraded : kExitOk;
}

int cmd_correlate(const fs::path& scores_path, const fs::path& human, const std::string& field,
                  const std::string& component) {
  const auto scores = bpm::read_scores_jsonl(scores_path);
  const auto table = bpm::load_human_annotations(human);
  std::vector<double> metric, rating;
  for (const auto& s : scores) {
    const auto it = table.find({s.sample_id, s.model_tag});
    if (it == table.end()) continue;
    const int h = it->second.get(component);
    if (h == 0) continue;
    metric.push_back(bpm::score_field(s, field));
    rating.push_back(h);
  }
  std::cout << fmt(bpm::pearson_correlation(metric, rating)) << "\n";
  std::cerr << metric.size() << " rated samples\n";
  return kExitOk;
}

json field_json(const bpm::NoiseField& f) {
  json out = json::array();
  for (int c = 0; c < f.channels(); ++c) {
    json plane = json::array();
    for (int y = 0; y < f.height(); ++y) {
      json row = json::array();
      for (int x = 0; x < f.width(); ++x) row.push_back(f.at(c, y, x));
      plane.push_back(std::move(row));
    }
    out.push_back(std::move(plane));
  }
  return out;
}

bpm::NoiseField field_from_json(const json& j, const char* name) {
  try {
    const int c = int(j.size()), h = int(j.at(0).size()), w = int(j.at(0).at(0).size());
    bpm::NoiseField f(c, h, w);
    for (int k = 0; k < c; ++k) {
      if (int(j.at(k).size()) != h) throw bpm::Error(bpm::ErrorKind::kShapeMismatch, name);
      for (int y = 0; y < h; ++y) {
        if (int(j.at(k).at(y).size()) != w) throw bpm::Error(bpm::ErrorKind::kShapeMismatch, name);
        for (int x = 0; x < w; ++x) f.at(k, y, x) = j.at(k).at(y).at(x).get<double>();
      }
    }
    return f;
  } catch (const json::exception&) {
    throw bpm::Error(bpm::ErrorKind::kSchemaViolation, name);
  }
}

int cmd_compose(const fs::path& input, const std::string& mask_png, const std::string& out) {
  std::ifstream in(input);
  if (!in) throw bpm::Error(bpm::ErrorKind::kIo, "cannot open " + input.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw bpm::Error(bpm::ErrorKind::kSchemaViolation, "compose input");
  const auto u = field_from_json(j.at("eps_uncond"), "eps_uncond");
  const auto i = field_from_json(j.at("eps_img"), "eps_img");
  const auto f = field_from_json(j.at("eps_full"), "eps_full");
  bpm::BinaryMask mask(u.width(), u.height(), true);
  if (!mask_png.empty()) {
    mask = bpm::load_mask(mask_png);
  } else if (j.contains("mask")) {
    const auto& m = j.at("mask");
    mask = bpm::BinaryMask(int(m.at(0).size()), int(m.size()));
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x) {
        const auto& v = m.at(y).at(x);
        mask.set(x, y, v.is_boolean() ? v.get<bool>() : v.get<double>() != 0.0);
      }
  }
  const auto eps = bpm::compose_guided_noise(u, i, f, j.at("s_image").get<double>(),
                                             j.at("s_text").get<double>(), mask);
  const std::string text = json{{"eps", field_json(eps)}}.dump();
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream(out, std::ios::trunc) << text << "\n";
  }
  return kExitOk;
}

int cmd_parse(const bpm::EngineConfig& cfg, const std::string& instruction, bool offline,
              bool show_prompt, const std::string& prompt_dir) {
  if (show_prompt) {
    const auto templates =
        prompt_dir.empty() ? bpm::default_prompt_templates() : bpm::load_prompt_templates(prompt_dir);
    std::cout << bpm::build_parse_prompt(instruction, templates) << "\n";
    return kExitOk;
  }
  if (offline || !cfg.provider) {
    const auto p = bpm::fallback_parse(instruction);
    if (!p) {
      std::cerr << "Unparseable: instruction not covered by the fallback grammar\n";
      return kExitDegraded;
    }
    std::cout << bpm::to_json(*p).dump() << "\n";
    return kExitOk;
  }
  const auto provider = open_provider(cfg);
  std::cout << bpm::to_json(provider->parse(instruction, {"cli", bpm::ImageRole::kOrigin, std::nullopt}))
                   .dump()
            << "\n";
  return kExitOk;
}

int cmd_report(const GlobalFlags& g, const std::vector<std::string>& score_files,
               const std::string& human, const std::string& triplet_scores,
               const std::string& out, const std::string& svg) {
  bpm::ReportInput in;
  std::vector<bpm::ScoreBreakdown> all;
  for (const auto& f : score_files)
    for (auto& s : bpm::read_scores_jsonl(f)) all.push_back(std::move(s));
  for (const auto& s : all) in.scores_by_model[s.model_tag].push_back(s);

  if (!human.empty()) {
    const auto table = bpm::load_human_annotations(human);
    for (const char* component : {"overall", "preservation", "modification", "size", "position"}) {
      std::vector<double> metric, rating;
      for (const auto& s : all) {
        const auto it = table.find({s.sample_id, s.model_tag});
        if (it == table.end() || it->second.get(component) == 0) continue;
        metric.push_back(s.bpm);
        rating.push_back(it->second.get(component));
      }
      try {
        in.correlations.push_back({"bpm", component, bpm::pearson_correlation(metric, rating)});
      } catch (const bpm::Error&) {
        // Too few ratings or no variance for this component.
      }
    }
    std::vector<std::string> models;
    for (const auto& [m, _] : in.scores_by_model) models.push_back(m);
    for (std::size_t a = 0; a < models.size(); ++a)
      for (std::size_t b = a + 1; b < models.size(); ++b) {
        bpm::ValueById ma, mb;
        for (const auto& s : in.scores_by_model[models[a]]) ma[s.sample_id] = s.bpm;
        for (const auto& s : in.scores_by_model[models[b]]) mb[s.sample_id] = s.bpm;
        try {
          in.alignments.push_back(
              {models[a] + " vs " + models[b], "bpm",
               bpm::pairwise_alignment(ma, mb, bpm::human_values(table, models[a]),
                                       bpm::human_values(table, models[b]), tie_policy(g.ties))});
        } catch (const bpm::Error& e) {
          std::cerr << "skipping " << models[a] << " vs " << models[b] << ": " << e.what() << "\n";
        }
      }
  }
  if (!triplet_scores.empty()) {
    in.favoring.push_back({"bpm", bpm::gt_favoring(bpm::read_triplet_scores(triplet_scores))});
  }
  bpm::emit_report(in, out, svg.empty() ? std::nullopt : std::optional<fs::path>(svg));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Balanced preservation/modification scoring for instruction-based image edits.\n"
      "Settings precedence: command-line flags > --config JSON > BPM_PROVIDER_URL."};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  Opts o;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  o.provider = app.add_option("--provider", g.provider, "fixtures:<dir> or http(s)://host:port");
  o.alpha = app.add_option("--alpha", g.alpha, "semantic/region balance (default 0.7)");
  o.norm_mode = app.add_option("--norm-mode", g.norm_mode, "batch (default) or fixed")
                    ->check(CLI::IsMember({"batch", "fixed"}));
  o.iou_tau = app.add_option("--iou-tau", g.iou_tau, "saliency IoU threshold (default 0.5)");
  o.ortho_eps = app.add_option("--ortho-eps", g.ortho_eps,
                               "allowed orthogonal drift, fraction of image size (default 0.1)");
  o.size_delta = app.add_option("--size-delta", g.size_delta, "area-ratio margin (default 0.1)");
  o.det_floor = app.add_option("--det-floor", g.det_floor, "detection confidence floor (default 0.25)");
  o.jobs = app.add_option("--jobs", g.jobs, "worker threads (default: CPU count)")
               ->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "seed for all randomness (default 0)");
  app.add_option("--ties", g.ties, "human-tie policy: exclude | count-as-disagreement")
      ->check(CLI::IsMember({"exclude", "count-as-disagreement"}));

  auto* evaluate = app.add_subcommand("evaluate", "score every manifest entry");
  std::string manifest, out;
  evaluate->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", out)->required();

  auto* align = app.add_subcommand("align", "pairwise agreement with human preference");
  std::string scores_a, scores_b, human, model_a, model_b, field = "bpm", component = "overall";
  align->add_option("--scores-a", scores_a)->required()->check(CLI::ExistingFile);
  align->add_option("--scores-b", scores_b)->required()->check(CLI::ExistingFile);
  align->add_option("--human", human)->required()->check(CLI::ExistingFile);
  align->add_option("--model-a", model_a, "model tag of A in the human file");
  align->add_option("--model-b", model_b, "model tag of B in the human file");
  align->add_option("--field", field, "score field (default bpm)");
  align->add_option("--component", component, "human rating component (default overall)");

  auto* gt = app.add_subcommand("gt-test", "ground-truth triplet test");
  std::string triplets, triplet_scores, build_manifest, distractors, out_dir, gt_out;
  double sigma = 0.15;
  gt->add_option("--triplets", triplets, "triplet JSONL to score")->check(CLI::ExistingFile);
  gt->add_option("--scores", triplet_scores, "precomputed triplet scores")->check(CLI::ExistingFile);
  gt->add_option("--build", build_manifest, "build triplets from this manifest")
      ->check(CLI::ExistingFile);
  gt->add_option("--distractors", distractors, "directory of <id>.png unrelated images");
  gt->add_option("--out-dir", out_dir, "where --build writes noised originals and triplets.jsonl");
  gt->add_option("--sigma", sigma, "noise level for the over-preserved candidate (default 0.15)");
  gt->add_option("--out", gt_out, "write per-candidate score records here");

  auto* correlate = app.add_subcommand("correlate", "Pearson r between scores and human ratings");
  std::string corr_scores;
  correlate->add_option("--scores", corr_scores)->required()->check(CLI::ExistingFile);
  correlate->add_option("--human", human)->required()->check(CLI::ExistingFile);
  correlate->add_option("--field", field);
  correlate->add_option("--component", component);

  auto* compose = app.add_subcommand("compose", "masked guidance composition on JSON fields");
  std::string compose_in, compose_mask, compose_out;
  compose->add_option("--input", compose_in,
                      "JSON with eps_uncond, eps_img, eps_full ([c][h][w]), s_image, s_text, "
                      "optional mask ([h][w])")
      ->required()
      ->check(CLI::ExistingFile);
  compose->add_option("--mask", compose_mask, "mask PNG (overrides the JSON mask)");
  compose->add_option("--out", compose_out);

  auto* parse = app.add_subcommand("parse", "parse one instruction");
  std::string instruction, prompt_dir;
  bool offline = false, show_prompt = false;
  parse->add_option("instruction", instruction)->required();
  parse->add_flag("--offline", offline, "use the built-in grammar instead of the provider");
  parse->add_flag("--prompt", show_prompt, "print the parser prompt and exit");
  parse->add_option("--prompt-dir", prompt_dir, "directory with prompt template files");

  auto* report = app.add_subcommand("report", "markdown report (optional SVG chart)");
  std::vector<std::string> report_scores;
  std::string report_human, report_triplets, report_out, report_svg;
  report->add_option("--scores", report_scores)->required()->check(CLI::ExistingFile);
  report->add_option("--human", report_human)->check(CLI::ExistingFile);
  report->add_option("--triplet-scores", report_triplets)->check(CLI::ExistingFile);
  report->add_option("--out", report_out)->required();
  report->add_option("--svg", report_svg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (*align) return cmd_align(g, scores_a, scores_b, human, model_a, model_b, field, component);
    if (*correlate) return cmd_correlate(corr_scores, human, field, component);
    if (*compose) return cmd_compose(compose_in, compose_mask, compose_out);
    if (*report) return cmd_report(g, report_scores, report_human, report_triplets, report_out, report_svg);
    const auto cfg = resolve_config(g, o);
    if (*evaluate) return cmd_evaluate(cfg, manifest, out);
    if (*gt) {
      return cmd_gt_test(g, cfg, triplet_scores, triplets, build_manifest, distractors, out_dir,
                         sigma, gt_out);
    }
    if (*parse) return cmd_parse(cfg, instruction, offline, show_prompt, prompt_dir);
  } catch (const bpm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
