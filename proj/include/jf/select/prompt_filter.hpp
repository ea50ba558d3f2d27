#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jf/core/types.hpp"

namespace jf::select {

struct KeywordClass {
  std::string name;
  std::vector<std::string> keywords;
};

struct ScoringParams {
  double length_weight = 0.6;
  double length_center = 65.0;
  double length_scale = 12.0;
  double clause_weight = 0.3;
  int clause_saturation = 4;
  double photo_bonus = 0.5;
  int long_word_limit = 150;
  double long_penalty = 0.2;
  int repeat_ngram = 3;
  int repeat_min_count = 3;
  double repeat_penalty = 0.2;
  double min_ascii_ratio = 0.9;
};

struct KeywordConfig {
  std::vector<KeywordClass> positive;
  std::vector<KeywordClass> negative;
  std::vector<std::string> photo;
  std::string default_category = "people-portrait";
  ScoringParams scoring;

  static KeywordConfig load(const std::filesystem::path& path);
  static KeywordConfig from_json(const Json& doc);
};

struct PromptCandidate {
  std::string text;
  int word_count = 0;
  int clause_count = 0;
  std::string category;
  double score = 0.0;
  std::optional<std::string> rejected_reason;

  bool operator==(const PromptCandidate&) const = default;
};

Json to_json(const PromptCandidate& v);
PromptCandidate prompt_candidate_from_json(const Json& j);

// Case-insensitive phrase match where the characters on either side of the
// hit are not letters, digits, apostrophes or hyphens.
bool contains_keyword(std::string_view text, std::string_view keyword);

int count_words(std::string_view text);
// Occurrences of ",", ";", " and ", " with ".
int count_clauses(std::string_view text);
double length_curve(int words, const ScoringParams& p);
double ascii_ratio(std::string_view text);

// Throws std::invalid_argument on empty text.
PromptCandidate score_prompt(std::string_view text, const KeywordConfig& config);

struct FilterResult {
  std::vector<PromptCandidate> accepted;
  std::vector<PromptCandidate> rejected;
};

// Rejection reasons: a negative class name, "non_english", or "empty".
FilterResult filter_prompts(std::span<const std::string> corpus, const KeywordConfig& config);

struct BalancedSelection {
  std::vector<PromptCandidate> selected;
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> log;
};

// Quotas by water-filling over categories in ascending size order: each
// category gets an equal share of what is left, capped at its size, and any
// shortfall flows to the larger categories. Within a category, higher scores
// win; equal scores are ordered by a seeded shuffle.
BalancedSelection balanced_select(std::span<const PromptCandidate> pool, std::size_t total,
                                  std::uint64_t seed);

}  // namespace jf::select
