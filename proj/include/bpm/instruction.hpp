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

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "bpm/errors.hpp"

namespace bpm {

enum class PositionState { kLeft, kRight, kUp, kDown, kUnchanged };
enum class SizeState { kLarger, kSmaller, kUnchanged };
enum class EditCase { kAdd, kRemove, kReplaceOrModify };

inline constexpr std::string_view to_string(PositionState s) {
  switch (s) {
    case PositionState::kLeft: return "left";
    case PositionState::kRight: return "right";
    case PositionState::kUp: return "up";
    case PositionState::kDown: return "down";
    case PositionState::kUnchanged: return "unchanged";
  }
  return "unchanged";
}

inline constexpr std::string_view to_string(SizeState s) {
  switch (s) {
    case SizeState::kLarger: return "larger";
    case SizeState::kSmaller: return "smaller";
    case SizeState::kUnchanged: return "unchanged";
  }
  return "unchanged";
}

inline constexpr std::string_view to_string(EditCase c) {
  switch (c) {
    case EditCase::kAdd: return "add";
    case EditCase::kRemove: return "remove";
    case EditCase::kReplaceOrModify: return "replace_or_modify";
  }
  return "replace_or_modify";
}

inline constexpr std::array kAllPositionStates = {
    PositionState::kLeft, PositionState::kRight, PositionState::kUp,
    PositionState::kDown, PositionState::kUnchanged};
inline constexpr std::array kAllSizeStates = {
    SizeState::kLarger, SizeState::kSmaller, SizeState::kUnchanged};

inline std::optional<PositionState> parse_position_state(std::string_view s) {
  for (auto v : kAllPositionStates)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

inline std::optional<SizeState> parse_size_state(std::string_view s) {
  for (auto v : kAllSizeStates)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

/// Output of instruction parsing. An absent source means "add", an absent
/// target means "remove". An absent reference means the edited object is
/// compared against its own original placement.
struct ParsedInstruction {
  std::optional<std::string> source_object;
  std::optional<std::string> target_object;
  std::optional<std::string> reference_object;
  PositionState pos_st = PositionState::kUnchanged;
  SizeState size_st = SizeState::kUnchanged;

  EditCase edit_case() const noexcept {
    if (!source_object) return EditCase::kAdd;
    if (!target_object) return EditCase::kRemove;
    return EditCase::kReplaceOrModify;
  }

  friend bool operator==(const ParsedInstruction&,
                         const ParsedInstruction&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return out;
}

inline std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

inline constexpr std::string_view kPromptTemplateVersion = "v1";
inline constexpr std::string_view kInstructionPlaceholder = "{instruction}";

struct PromptTemplates {
  std::string object_identify;
  std::string size_state;
  std::string position_state;
};

inline const PromptTemplates& default_prompt_templates() {
  static const PromptTemplates templates{
      R"(You analyse image editing instructions. Editing instruction: "{instruction}"
Step 1 - object identification. Name the object category that the edit acts on in the
original image (source object) and the object category that should appear in the edited
image (target object). Use short noun phrases taken from the instruction, without articles.
If the instruction adds a new object, the source object is None. If it removes an object,
the target object is None. If the object only changes an attribute (colour, size, place),
source and target are the same phrase. If the instruction places the target relative to
another object ("to the right of the banana"), name that object as the reference object;
otherwise the reference object is None.
)",
      R"(Step 2 - size state. Editing instruction: "{instruction}"
Decide how the size of the edited object should change between the original and the edited
image. Answer exactly one of: larger, smaller, unchanged. Answer unchanged unless the
instruction explicitly asks for a bigger or smaller object.
)",
      R"(Step 3 - position state. Editing instruction: "{instruction}"
Decide where the edited object should end up relative to the reference object (or relative
to its own original place when there is no reference object). Answer exactly one of:
left, right, up, down, unchanged. Objects placed above something are up, below or under
something are down. Answer unchanged unless the instruction asks for a placement or a move.
Reply with a single JSON object and nothing else, using exactly these keys:
{"source_object": string or null, "target_object": string or null,
 "reference_object": string or null, "pos_st": string, "size_st": string}
)"};
  return templates;
}

/// Reads `object_identify.txt`, `size_state.txt` and `position_state.txt`.
inline PromptTemplates load_prompt_templates(const std::filesystem::path& dir) {
  auto slurp = [&](const char* name) {
    std::ifstream in(dir / name);
    if (!in) throw Error(ErrorKind::kIo, "missing prompt template " + (dir / name).string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  return {slurp("object_identify.txt"), slurp("size_state.txt"),
          slurp("position_state.txt")};
}

inline std::string build_parse_prompt(
    std::string_view instruction,
    const PromptTemplates& templates = default_prompt_templates()) {
  const std::string text = detail::trim(instruction);
  if (text.empty()) {
    throw Error(ErrorKind::kEmptyInstruction, "instruction is empty");
  }
  auto fill = [&](std::string block) {
    for (auto pos = block.find(kInstructionPlaceholder);
         pos != std::string::npos;
         pos = block.find(kInstructionPlaceholder, pos + text.size())) {
      block.replace(pos, kInstructionPlaceholder.size(), text);
    }
    return block;
  };
  return fill(templates.object_identify) + "\n" + fill(templates.size_state) +
         "\n" + fill(templates.position_state);
}

// ---------------------------------------------------------------------------
// Response schema
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ParsedInstruction& p) {
  auto opt = [](const std::optional<std::string>& s) -> nlohmann::json {
    return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
  };
  return {{"source_object", opt(p.source_object)},
          {"target_object", opt(p.target_object)},
          {"reference_object", opt(p.reference_object)},
          {"pos_st", to_string(p.pos_st)},
          {"size_st", to_string(p.size_st)},
          {"edit_case", to_string(p.edit_case())}};
}

inline ParsedInstruction validate_parse_response(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw Error(ErrorKind::kSchemaViolation, "response");
  }
  auto object_field = [&](const char* key,
                          bool required) -> std::optional<std::string> {
    if (!j.contains(key)) {
      if (required) throw Error(ErrorKind::kSchemaViolation, key);
      return std::nullopt;
    }
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) throw Error(ErrorKind::kSchemaViolation, key);
    std::string s = detail::collapse_spaces(detail::lower(detail::trim(v.get<std::string>())));
    if (s.empty() || s == "none" || s == "null") return std::nullopt;
    return s;
  };
  auto enum_field = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) {
      throw Error(ErrorKind::kSchemaViolation, key);
    }
    return detail::lower(detail::trim(j.at(key).get<std::string>()));
  };

  ParsedInstruction p;
  p.source_object = object_field("source_object", true);
  p.target_object = object_field("target_object", true);
  p.reference_object = object_field("reference_object", false);
  if (!p.source_object && !p.target_object) {
    throw Error(ErrorKind::kSchemaViolation, "target_object");
  }
  const auto pos = parse_position_state(enum_field("pos_st"));
  if (!pos) throw Error(ErrorKind::kSchemaViolation, "pos_st");
  const auto size = parse_size_state(enum_field("size_st"));
  if (!size) throw Error(ErrorKind::kSchemaViolation, "size_st");
  p.pos_st = *pos;
  p.size_st = *size;
  // A reference naming the edited object itself is the same as no reference.
  if (p.reference_object &&
      (p.reference_object == p.source_object ||
       p.reference_object == p.target_object)) {
    p.reference_object.reset();
  }
  if (j.contains("edit_case")) {
    const auto& ec = j.at("edit_case");
    if (!ec.is_string() ||
        detail::lower(ec.get<std::string>()) != to_string(p.edit_case())) {
      throw Error(ErrorKind::kSchemaViolation, "edit_case");
    }
  }
  return p;
}

inline ParsedInstruction validate_parse_response(std::string_view raw) {
  auto j = nlohmann::json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    throw Error(ErrorKind::kSchemaViolation, "response");
  }
  return validate_parse_response(j);
}

// ---------------------------------------------------------------------------
// Template-grammar fallback
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<std::string> object_phrase(std::string s) {
  s = trim(s);
  for (std::string_view article : {"the ", "an ", "a "}) {
    if (s.starts_with(article)) {
      s = trim(std::string_view(s).substr(article.size()));
      break;
    }
  }
  if (s.empty() || s == "none" || s == "the" || s == "a" || s == "an") return std::nullopt;
  // Multi-object edits are out of reach for the grammar.
  if (s.find(" and ") != std::string::npos || s.find(',') != std::string::npos) {
    return std::nullopt;
  }
  return s;
}

}  // namespace detail

/// Deterministic parser for a handful of instruction templates. Returns
/// nullopt (Unparseable) for anything else; an LLM provider is needed then.
inline std::optional<ParsedInstruction> fallback_parse(
    std::string_view instruction) {
  std::string text = detail::collapse_spaces(detail::lower(detail::trim(instruction)));
  while (!text.empty() && (text.back() == '.' || text.back() == '!')) text.pop_back();
  text = detail::trim(text);
  if (text.empty()) return std::nullopt;

  static const std::regex add_relative(
      R"(^add (.+?) (to the left of|to the right of|on the left of|on the right of|above|below|under|on top of) (.+)$)");
  static const std::regex add_plain(R"(^add (.+)$)");
  static const std::regex remove(R"(^(?:remove|delete|erase) (.+)$)");
  static const std::regex replace(R"(^replace (.+?) with (.+)$)");
  static const std::regex change(R"(^(?:change|turn) (.+?) (?:to|into) (.+)$)");
  static const std::regex resize(R"(^make (.+?) (bigger|larger|smaller)$)");
  static const std::regex move(
      R"(^move (.+?) (?:to the |towards the )?(left|right|up|down)(?:wards)?$)");

  std::smatch m;
  ParsedInstruction p;
  if (std::regex_match(text, m, add_relative)) {
    auto target = detail::object_phrase(m[1]);
    auto ref = detail::object_phrase(m[3]);
    if (!target || !ref) return std::nullopt;
    const std::string rel = m[2];
    p.target_object = target;
    p.reference_object = ref;
    if (rel.find("left") != std::string::npos) p.pos_st = PositionState::kLeft;
    else if (rel.find("right") != std::string::npos) p.pos_st = PositionState::kRight;
    else if (rel == "below" || rel == "under") p.pos_st = PositionState::kDown;
    else p.pos_st = PositionState::kUp;
  } else if (std::regex_match(text, m, add_plain)) {
    p.target_object = detail::object_phrase(m[1]);
    if (!p.target_object) return std::nullopt;
  } else if (std::regex_match(text, m, remove)) {
    p.source_object = detail::object_phrase(m[1]);
    if (!p.source_object) return std::nullopt;
  } else if (std::regex_match(text, m, replace) ||
             std::regex_match(text, m, change)) {
    p.source_object = detail::object_phrase(m[1]);
    p.target_object = detail::object_phrase(m[2]);
    if (!p.source_object || !p.target_object) return std::nullopt;
  } else if (std::regex_match(text, m, resize)) {
    p.source_object = detail::object_phrase(m[1]);
    if (!p.source_object) return std::nullopt;
    p.target_object = p.source_object;
    p.size_st = m[2] == "smaller" ? SizeState::kSmaller : SizeState::kLarger;
  } else if (std::regex_match(text, m, move)) {
    p.source_object = detail::object_phrase(m[1]);
    if (!p.source_object) return std::nullopt;
    p.target_object = p.source_object;
    p.pos_st = *parse_position_state(m[2].str());
  } else {
    return std::nullopt;
  }
  return p;
}

}  // namespace bpm
