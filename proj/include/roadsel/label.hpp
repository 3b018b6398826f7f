#pragma once

#include <optional>
#include <string_view>

namespace roadsel {

// FAIL encodes as 0 and PASS as 1 wherever a numeric target is needed.
enum class Label : int { kFail = 0, kPass = 1 };

constexpr double to_target(Label l) { return l == Label::kPass ? 1.0 : 0.0; }

constexpr std::string_view to_string(Label l) {
  return l == Label::kPass ? "PASS" : "FAIL";
}

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "PASS") return Label::kPass;
  if (s == "FAIL") return Label::kFail;
  return std::nullopt;
}

// Shared decision rule for every classifier: PASS iff p > 0.5.
constexpr Label label_from_probability(double p) {
  return p > 0.5 ? Label::kPass : Label::kFail;
}

}  // namespace roadsel
