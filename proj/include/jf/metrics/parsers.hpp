#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "jf/core/types.hpp"

namespace jf::metrics {

// Body of the first `<tag>...</tag>` pair, tag names matched case-insensitively.
// Never throws.
std::optional<std::string> extract_tag(std::string_view text, std::string_view tag);

struct PointwiseVerdict {
  int rating = 0;
  std::string rationale;

  bool operator==(const PointwiseVerdict&) const = default;
};

// First `<score>` body must be an integer in 1..5; `<reasoning>` is optional
// and may appear before or after it. Surrounding chatter is ignored.
std::optional<PointwiseVerdict> parse_pointwise(std::string_view text);

// First `<answer>` body, trimmed and case-folded, must be A or B.
std::optional<Choice> parse_pairwise(std::string_view text);

// First `<answer>` body naming real, fake or edited (case-insensitive).
std::optional<Label> parse_detect(std::string_view text);

std::string trim(std::string_view s);

}  // namespace jf::metrics
