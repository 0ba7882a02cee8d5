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

// Meta-evaluation: agreement with human pairwise preferences, the
// ground-truth triplet test, Pearson correlation and report rendering.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bpm/errors.hpp"
#include "bpm/geometry.hpp"
#include "bpm/image_io.hpp"
#include "bpm/manifest.hpp"
#include "bpm/scoring.hpp"
#include "bpm/semantic_judge.hpp"

namespace bpm {

// ---------------------------------------------------------------------------
// Pairwise alignment
// ---------------------------------------------------------------------------

enum class TiePolicy { kExclude, kCountAsDisagreement };

inline constexpr std::string_view to_string(TiePolicy p) {
  return p == TiePolicy::kExclude ? "exclude" : "count-as-disagreement";
}

struct AlignmentResult {
  std::size_t agreements = 0;
  std::size_t compared = 0;
  std::size_t human_ties = 0;
  TiePolicy tie_policy = TiePolicy::kExclude;

  double ratio() const { return double(agreements) / double(compared); }
};

using ValueById = std::map<std::string, double>;

/// Fraction of samples where [metric_a > metric_b] equals [human_a > human_b].
/// Metric ties count as "not greater"; human ties follow `ties`.
inline AlignmentResult pairwise_alignment(const ValueById& metric_a,
                                          const ValueById& metric_b,
                                          const ValueById& human_a,
                                          const ValueById& human_b,
                                          TiePolicy ties = TiePolicy::kExclude) {
  auto same_ids = [](const ValueById& x, const ValueById& y) {
    if (x.size() != y.size()) return false;
    for (auto ix = x.begin(), iy = y.begin(); ix != x.end(); ++ix, ++iy)
      if (ix->first != iy->first) return false;
    return true;
  };
  if (!same_ids(metric_a, metric_b) || !same_ids(metric_a, human_a) ||
      !same_ids(metric_a, human_b)) {
    throw Error(ErrorKind::kIdSetMismatch,
                "metric and human streams must cover the same sample ids");
  }
  AlignmentResult r;
  r.tie_policy = ties;
  for (const auto& [id, ma] : metric_a) {
    const double mb = metric_b.at(id);
    const double ha = human_a.at(id);
    const double hb = human_b.at(id);
    if (ha == hb) {
      ++r.human_ties;
      if (ties == TiePolicy::kExclude) continue;
      ++r.compared;
      continue;
    }
    ++r.compared;
    if ((ma > mb) == (ha > hb)) ++r.agreements;
  }
  if (r.compared == 0) {
    throw Error(ErrorKind::kNoComparablePairs, "every human pair is tied");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Ground-truth triplet test
// ---------------------------------------------------------------------------

struct TripletScores {
  double gt = 0.0;
  double over_preserved = 0.0;
  double over_modified = 0.0;
};

enum class TripletWinner { kOverPreserved, kOverModified, kGroundTruth };

/// Ties involving the ground truth go to the ground truth; an EP/EM tie goes
/// to EP.
inline TripletWinner triplet_winner(const TripletScores& s) {
  if (s.gt >= s.over_preserved && s.gt >= s.over_modified) return TripletWinner::kGroundTruth;
  return s.over_preserved >= s.over_modified ? TripletWinner::kOverPreserved
                                             : TripletWinner::kOverModified;
}

struct GtFavoring {
  std::size_t ep = 0;
  std::size_t em = 0;
  std::size_t gt = 0;

  std::size_t total() const noexcept { return ep + em + gt; }
  double p_ep() const { return double(ep) / double(total()); }
  double p_em() const { return double(em) / double(total()); }
  double p_gt() const { return double(gt) / double(total()); }
};

inline GtFavoring gt_favoring(std::span<const TripletScores> triplets) {
  if (triplets.empty()) throw Error(ErrorKind::kEmptyInput, "gt_favoring");
  GtFavoring f;
  for (const auto& t : triplets) {
    switch (triplet_winner(t)) {
      case TripletWinner::kOverPreserved: ++f.ep; break;
      case TripletWinner::kOverModified: ++f.em; break;
      case TripletWinner::kGroundTruth: ++f.gt; break;
    }
  }
  return f;
}

/// Writes the noised original (EP) for each entry into `out_dir` and pairs it
/// with `<distractor_dir>/<id>.png` (EM) and the entry's edited image (GT).
inline std::vector<Triplet> build_gt_triplets(
    const std::vector<SampleManifestEntry>& manifest, double sigma,
    std::uint64_t seed, const std::filesystem::path& distractor_dir,
    const std::filesystem::path& out_dir) {
  std::vector<Triplet> out;
  out.reserve(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& e = manifest[i];
    Triplet t;
    t.id = e.id;
    t.original_path = e.original_path;
    t.instruction = e.instruction;
    t.gt_path = e.edited_path;
    t.over_modified_path = distractor_dir / (e.id + ".png");
    if (!std::filesystem::exists(t.over_modified_path)) {
      throw Error(ErrorKind::kMissingDistractor,
                  e.id + ": " + t.over_modified_path.string());
    }
    t.over_preserved_path = out_dir / (e.id + "_ep.png");
    const RasterImage original = load_image(e.original_path);
    save_image(t.over_preserved_path,
               add_gaussian_noise(original, sigma, seed + 0x9E3779B97F4A7C15ULL * (i + 1)));
    if (sigma == 0.0) t.flags.push_back("ep_identical_to_original");
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

inline double pearson_correlation(std::span<const double> metric,
                                  std::span<const double> human) {
  if (metric.size() != human.size() || metric.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "pearson_correlation needs two equal-length lists of length >= 2");
  }
  const double n = double(metric.size());
  const double mx = std::accumulate(metric.begin(), metric.end(), 0.0) / n;
  const double my = std::accumulate(human.begin(), human.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < metric.size(); ++i) {
    const double dx = metric[i] - mx;
    const double dy = human[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::kDegenerateVariance, "zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Named numeric field of a score record, as used by the CLI (--field).
inline double score_field(const ScoreBreakdown& s, std::string_view field) {
  if (field == "bpm") return s.bpm;
  if (field == "s_semantic") return s.s_semantic;
  if (field == "s_region") return s.s_region;
  if (field == "s_modify_raw") return s.s_modify_raw;
  if (field == "s_preserve_raw") return s.s_preserve_raw;
  if (field == "s_modify_norm") return s.s_modify_norm;
  if (field == "s_preserve_norm") return s.s_preserve_norm;
  if (field == "s_position") return s.s_position();
  if (field == "s_size") return s.s_size();
  throw Error(ErrorKind::kInvalidArgument, "unknown score field '" + std::string(field) + "'");
}

// ---------------------------------------------------------------------------
// Value streams
// ---------------------------------------------------------------------------

/// Reads `field` from every record of a score JSONL file, keyed by
/// `sample_id` (or `id`). Only those two keys are required.
inline ValueById read_metric_values(const std::filesystem::path& path,
                                    const std::string& field = "bpm") {
  ValueById out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& j) {
    const std::string id =
        j.contains("sample_id") ? j.at("sample_id").get<std::string>() : j.at("id").get<std::string>();
    if (!j.contains(field) || !j.at(field).is_number()) {
      throw Error(ErrorKind::kSchemaViolation, field);
    }
    if (!out.emplace(id, j.at(field).get<double>()).second) {
      throw Error(ErrorKind::kSchemaViolation, "duplicate sample id " + id);
    }
  });
  return out;
}

/// Human ratings of one model, keyed by sample id.
inline ValueById human_values(const HumanTable& table, const std::string& model_tag,
                              const std::string& component = "overall") {
  ValueById out;
  for (const auto& [key, h] : table)
    if (key.second == model_tag) out[key.first] = h.get(component);
  return out;
}

// ---------------------------------------------------------------------------
// Triplet evaluation
// ---------------------------------------------------------------------------

struct TripletEvaluation {
  std::vector<ScoreBreakdown> breakdowns;  // gt, ep, em per triplet
  std::vector<TripletScores> bpm;
  std::vector<TripletScores> preservation_only;
};

/// Whole-image 1 - RMS between two images; the preservation-only baseline.
inline double whole_image_preservation(const RasterImage& original, const RasterImage& candidate) {
  const RasterImage c = resize_bilinear(candidate, original.dims());
  return preservation_score(original, c, BinaryMask(original.width(), original.height())).score;
}

/// Scores all 3N candidates as one batch (so normalization spans them all).
/// Candidate ids are `<id>_gt`, `<id>_ep` and `<id>_em`.
inline TripletEvaluation evaluate_triplets(const std::vector<Triplet>& triplets,
                                           const PerceptionProvider& provider,
                                           const EvaluationConfig& cfg, unsigned jobs) {
  std::vector<SampleManifestEntry> flat;
  flat.reserve(triplets.size() * 3);
  for (const auto& t : triplets) {
    flat.push_back({t.id + "_gt", t.original_path, t.gt_path, t.instruction, "gt", std::nullopt});
    flat.push_back({t.id + "_ep", t.original_path, t.over_preserved_path, t.instruction, "ep",
                    std::nullopt});
    flat.push_back({t.id + "_em", t.original_path, t.over_modified_path, t.instruction, "em",
                    std::nullopt});
  }
  TripletEvaluation out;
  out.breakdowns = evaluate_manifest(flat, provider, cfg, jobs);
  out.preservation_only.resize(triplets.size());
  parallel_for(triplets.size(), jobs, [&](std::size_t i) {
    const auto& t = triplets[i];
    const RasterImage original = load_image(t.original_path);
    out.preservation_only[i] = {whole_image_preservation(original, load_image(t.gt_path)),
                                whole_image_preservation(original, load_image(t.over_preserved_path)),
                                whole_image_preservation(original, load_image(t.over_modified_path))};
  });
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    out.bpm.push_back({out.breakdowns[3 * i].bpm, out.breakdowns[3 * i + 1].bpm,
                       out.breakdowns[3 * i + 2].bpm});
  }
  return out;
}

/// Reads precomputed triplet scores: {"id", "gt", "over_preserved", "over_modified"}.
inline std::vector<TripletScores> read_triplet_scores(const std::filesystem::path& path) {
  std::vector<TripletScores> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& j) {
    try {
      out.push_back({j.at("gt").get<double>(), j.at("over_preserved").get<double>(),
                     j.at("over_modified").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kSchemaViolation, e.what());
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct AlignmentRow {
  std::string label;  // e.g. "ip2p vs mgie"
  std::string metric;
  AlignmentResult result;
};

struct FavoringRow {
  std::string metric;
  GtFavoring favoring;
};

struct CorrelationRow {
  std::string metric;
  std::string component;
  double r = 0.0;
};

struct ReportInput {
  std::map<std::string, std::vector<ScoreBreakdown>> scores_by_model;
  std::vector<AlignmentRow> alignments;
  std::vector<FavoringRow> favoring;
  std::vector<CorrelationRow> correlations;
};

struct ModelSummary {
  std::size_t samples = 0;
  std::size_t failed = 0;
  double s_position = 0, s_size = 0, s_region = 0;
  double s_modify_raw = 0, s_preserve_raw = 0, s_semantic = 0, bpm = 0;
};

inline ModelSummary summarize(const std::vector<ScoreBreakdown>& scores) {
  ModelSummary m;
  m.samples = scores.size();
  for (const auto& s : scores) {
    if (s.failed()) ++m.failed;
    m.s_position += s.s_position();
    m.s_size += s.s_size();
    m.s_region += s.s_region;
    m.s_modify_raw += s.s_modify_raw;
    m.s_preserve_raw += s.s_preserve_raw;
    m.s_semantic += s.s_semantic;
    m.bpm += s.bpm;
  }
  if (m.samples) {
    const double n = double(m.samples);
    for (double* v : {&m.s_position, &m.s_size, &m.s_region, &m.s_modify_raw,
                      &m.s_preserve_raw, &m.s_semantic, &m.bpm})
      *v /= n;
  }
  return m;
}

inline std::string render_markdown_report(const ReportInput& in) {
  std::ostringstream md;
  md << std::fixed << std::setprecision(3);
  md << "# BPM evaluation report\n\n## Dataset summary\n\n";
  md << "| model | samples | failed | S_position | S_size | S_region | S_modify (raw) "
        "| S_preserve (raw) | S_semantic | BPM |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& [model, scores] : in.scores_by_model) {
    const auto m = summarize(scores);
    md << "| " << (model.empty() ? "(untagged)" : model) << " | " << m.samples << " | "
       << m.failed << " | " << m.s_position << " | " << m.s_size << " | " << m.s_region
       << " | " << m.s_modify_raw << " | " << m.s_preserve_raw << " | " << m.s_semantic
       << " | " << m.bpm << " |\n";
  }
  if (!in.alignments.empty()) {
    md << "\n## Human alignment\n\n";
    md << "| comparison | metric | agreements | compared | human ties | tie policy | alignment |\n";
    md << "|---|---|---|---|---|---|---|\n";
    for (const auto& a : in.alignments) {
      md << "| " << a.label << " | " << a.metric << " | " << a.result.agreements << " | "
         << a.result.compared << " | " << a.result.human_ties << " | "
         << to_string(a.result.tie_policy) << " | " << a.result.ratio() << " |\n";
    }
  }
  if (!in.favoring.empty()) {
    md << "\n## Ground-truth test\n\n| metric | EP | EM | GT |\n|---|---|---|---|\n";
    for (const auto& f : in.favoring) {
      md << "| " << f.metric << " | " << f.favoring.p_ep() << " | " << f.favoring.p_em()
         << " | " << f.favoring.p_gt() << " |\n";
    }
  }
  if (!in.correlations.empty()) {
    md << "\n## Correlation with human ratings\n\n| metric | component | Pearson r |\n"
          "|---|---|---|\n";
    for (const auto& c : in.correlations) {
      md << "| " << c.metric << " | " << c.component << " | " << c.r << " |\n";
    }
  }
  return md.str();
}

/// Horizontal bar chart of per-model mean BPM, S_semantic and S_region.
inline std::string render_svg_chart(const ReportInput& in) {
  constexpr int kBarHeight = 14, kGroupGap = 12, kLabelWidth = 140, kPlotWidth = 400;
  constexpr double kMaxScore = 2.0;
  const std::array<std::pair<const char*, const char*>, 3> series = {
      {{"BPM", "#4e79a7"}, {"S_semantic", "#f28e2b"}, {"S_region", "#59a14f"}}};
  const int groups = int(in.scores_by_model.size());
  const int height = 40 + groups * (3 * kBarHeight + kGroupGap);
  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLabelWidth + kPlotWidth + 80
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  int y = 20;
  for (const auto& [model, scores] : in.scores_by_model) {
    const auto m = summarize(scores);
    const std::array<double, 3> values = {m.bpm, m.s_semantic, m.s_region};
    svg << "  <text x=\"4\" y=\"" << y + kBarHeight + 4 << "\">"
        << (model.empty() ? "(untagged)" : model) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
      const double w = std::clamp(values[k] / kMaxScore, 0.0, 1.0) * kPlotWidth;
      svg << "  <rect x=\"" << kLabelWidth << "\" y=\"" << y << "\" width=\"" << w
          << "\" height=\"" << kBarHeight - 2 << "\" fill=\"" << series[k].second << "\"/>\n";
      svg << "  <text x=\"" << kLabelWidth + w + 4 << "\" y=\"" << y + kBarHeight - 4 << "\">"
          << series[k].first << " " << values[k] << "</text>\n";
      y += kBarHeight;
    }
    y += kGroupGap;
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void emit_report(const ReportInput& in, const std::filesystem::path& out_path,
                        std::optional<std::filesystem::path> svg_path = std::nullopt) {
  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  std::string md = render_markdown_report(in);
  if (svg_path) {
    std::ofstream svg(*svg_path, std::ios::trunc);
    if (!svg) throw Error(ErrorKind::kIo, "cannot write " + svg_path->string());
    svg << render_svg_chart(in);
    md += "\n![mean scores](" + svg_path->filename().string() + ")\n";
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + out_path.string());
  out << md;
}

}  // namespace bpm
