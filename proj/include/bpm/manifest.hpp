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

// JSONL manifests: evaluation samples, human ratings and ground-truth triplets.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpm/errors.hpp"

namespace bpm {

struct HumanScores {
  int overall = 0;
  int preservation = 0;
  int modification = 0;
  int size = 0;
  int position = 0;

  /// Looks up a rating by its manifest field name.
  int get(std::string_view component) const {
    if (component == "overall") return overall;
    if (component == "preservation") return preservation;
    if (component == "modification") return modification;
    if (component == "size") return size;
    if (component == "position") return position;
    throw Error(ErrorKind::kInvalidArgument,
                "unknown human score component '" + std::string(component) + "'");
  }
};

struct SampleManifestEntry {
  std::string id;
  std::filesystem::path original_path;
  std::filesystem::path edited_path;
  std::string instruction;
  std::string model_tag;
  std::optional<HumanScores> human;
};

struct Triplet {
  std::string id;
  std::filesystem::path original_path;
  std::string instruction;
  std::filesystem::path gt_path;
  std::filesystem::path over_preserved_path;
  std::filesystem::path over_modified_path;
  std::vector<std::string> flags;
};

namespace detail {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorKind::kSchemaViolation,
                  path.string() + ":" + std::to_string(lineno) + ": not a JSON object");
    }
    try {
      fn(j);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kSchemaViolation,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline std::filesystem::path resolve(const std::filesystem::path& base,
                                     const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline HumanScores human_from_json(const nlohmann::json& j) {
  HumanScores h;
  auto rating = [&](const char* key) {
    if (!j.contains(key)) return 0;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 5) {
      throw Error(ErrorKind::kSchemaViolation, std::string("human.") + key);
    }
    return v.get<int>();
  };
  h.overall = rating("overall");
  h.preservation = rating("preservation");
  h.modification = rating("modification");
  h.size = rating("size");
  h.position = rating("position");
  return h;
}

}  // namespace detail

inline nlohmann::json to_json(const HumanScores& h) {
  nlohmann::json j = nlohmann::json::object();
  if (h.overall) j["overall"] = h.overall;
  if (h.preservation) j["preservation"] = h.preservation;
  if (h.modification) j["modification"] = h.modification;
  if (h.size) j["size"] = h.size;
  if (h.position) j["position"] = h.position;
  return j;
}

/// Relative paths resolve against the manifest's directory. With
/// `check_paths`, missing image files are an ingest error.
inline std::vector<SampleManifestEntry> load_manifest(
    const std::filesystem::path& path, bool check_paths = true) {
  const auto base = path.parent_path();
  std::vector<SampleManifestEntry> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& j) {
    SampleManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.original_path = detail::resolve(base, j.value("original_path", std::string{}));
    e.edited_path = detail::resolve(base, j.value("edited_path", std::string{}));
    e.instruction = j.value("instruction", std::string{});
    e.model_tag = j.value("model_tag", std::string{});
    if (j.contains("human") && !j.at("human").is_null()) {
      e.human = detail::human_from_json(j.at("human"));
    }
    if (check_paths) {
      for (const auto& p : {e.original_path, e.edited_path}) {
        if (!std::filesystem::exists(p)) {
          throw Error(ErrorKind::kIo, e.id + ": missing image " + p.string());
        }
      }
    }
    out.push_back(std::move(e));
  });
  return out;
}

/// Human ratings keyed by (sample id, model tag).
using HumanTable = std::map<std::pair<std::string, std::string>, HumanScores>;

inline HumanTable load_human_annotations(const std::filesystem::path& path) {
  HumanTable table;
  detail::for_each_jsonl(path, [&](const nlohmann::json& j) {
    if (!j.contains("human")) return;
    table[{j.at("id").get<std::string>(), j.value("model_tag", std::string{})}] =
        detail::human_from_json(j.at("human"));
  });
  return table;
}

inline nlohmann::json to_json(const Triplet& t) {
  return {{"id", t.id},
          {"original_path", t.original_path.generic_string()},
          {"instruction", t.instruction},
          {"gt_path", t.gt_path.generic_string()},
          {"over_preserved_path", t.over_preserved_path.generic_string()},
          {"over_modified_path", t.over_modified_path.generic_string()},
          {"flags", t.flags}};
}

inline std::vector<Triplet> load_triplets(const std::filesystem::path& path) {
  const auto base = path.parent_path();
  std::vector<Triplet> out;
  detail::for_each_jsonl(path, [&](const nlohmann::json& j) {
    Triplet t;
    t.id = j.at("id").get<std::string>();
    t.original_path = detail::resolve(base, j.at("original_path").get<std::string>());
    t.instruction = j.value("instruction", std::string{});
    t.gt_path = detail::resolve(base, j.at("gt_path").get<std::string>());
    t.over_preserved_path =
        detail::resolve(base, j.at("over_preserved_path").get<std::string>());
    t.over_modified_path =
        detail::resolve(base, j.at("over_modified_path").get<std::string>());
    if (j.contains("flags")) t.flags = j.at("flags").get<std::vector<std::string>>();
    if (t.gt_path == t.over_preserved_path || t.gt_path == t.over_modified_path ||
        t.over_preserved_path == t.over_modified_path) {
      throw Error(ErrorKind::kSchemaViolation, t.id + ": triplet candidates must be distinct");
    }
    out.push_back(std::move(t));
  });
  return out;
}

}  // namespace bpm
