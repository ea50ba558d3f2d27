#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jf/core/types.hpp"

namespace jf::bootstrap {

// First JSON object embedded in a model reply. Tolerates code fences and
// chatter around the object. Never throws.
std::optional<Json> extract_json_object(std::string_view text);

struct GoldReply {
  std::string think;
  Label answer = Label::real;
  // "<think>...</think>\n<answer>Label</answer>"
  std::string canonical;
};

// Two-line gold format: a <think> block, then <answer>real|fake|edited with an
// optional closing tag. Nothing else may follow apart from whitespace.
std::optional<GoldReply> parse_gold_reply(std::string_view text);

// Integer level from "rating_3", "rating 3", "rating3", "Rating-3".
std::optional<int> rating_key(std::string_view key);

// Values under rating keys that are non-empty strings.
std::map<int, std::string> parse_rating_map(const Json& obj);

struct EvalReply {
  int rating = 0;
  std::string rationale;
  bool rationale_missing = false;
};

// {"candidate_1": {"rating": n, "rationale": "..."}}; also accepts
// "candidate-1", a single unnamed entry, or a bare {"rating": n}.
std::optional<EvalReply> parse_eval_reply(std::string_view text);

// paraphrase_1..paraphrase_k values; absent or non-string entries are omitted.
std::map<int, std::string> parse_paraphrases(const Json& obj);

// Sorted multiset of XML-style tag tokens such as "<answer>" and "</answer>".
std::vector<std::string> tag_signature(std::string_view text);

}  // namespace jf::bootstrap
