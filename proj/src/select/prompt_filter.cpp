#include "jf/select/prompt_filter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "jf/core/config.hpp"
#include "jf/core/error.hpp"
#include "jf/core/log.hpp"
#include "jf/core/rng.hpp"

namespace jf::select {
namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '\'' || c == '-' || u >= 0x80;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(lower_ascii(w));
  return out;
}

std::vector<KeywordClass> read_classes(const Json& doc, const char* key) {
  std::vector<KeywordClass> out;
  if (!doc.contains(key)) return out;
  for (const auto& entry : doc.at(key)) {
    KeywordClass c;
    c.name = entry.at("name").get<std::string>();
    c.keywords = entry.at("keywords").get<std::vector<std::string>>();
    out.push_back(std::move(c));
  }
  return out;
}

template <typename T>
void read_param(const Json& table, const char* key, T& slot) {
  if (table.contains(key)) slot = table.at(key).get<T>();
}

bool repeats_ngram(const std::vector<std::string>& words, int n, int min_count) {
  if (n <= 0 || static_cast<int>(words.size()) < n) return false;
  std::map<std::vector<std::string>, int> counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size(); ++i) {
    std::vector<std::string> gram(words.begin() + static_cast<std::ptrdiff_t>(i),
                                  words.begin() + static_cast<std::ptrdiff_t>(i) + n);
    if (++counts[gram] >= min_count) return true;
  }
  return false;
}

}  // namespace

KeywordConfig KeywordConfig::load(const std::filesystem::path& path) {
  return from_json(load_toml(path));
}

KeywordConfig KeywordConfig::from_json(const Json& doc) {
  KeywordConfig cfg;
  try {
    cfg.positive = read_classes(doc, "positive");
    cfg.negative = read_classes(doc, "negative");
    if (doc.contains("photo")) cfg.photo = doc.at("photo").at("keywords").get<std::vector<std::string>>();
    read_param(doc, "default_category", cfg.default_category);
    if (doc.contains("scoring")) {
      const auto& s = doc.at("scoring");
      auto& p = cfg.scoring;
      read_param(s, "length_weight", p.length_weight);
      read_param(s, "length_center", p.length_center);
      read_param(s, "length_scale", p.length_scale);
      read_param(s, "clause_weight", p.clause_weight);
      read_param(s, "clause_saturation", p.clause_saturation);
      read_param(s, "photo_bonus", p.photo_bonus);
      read_param(s, "long_word_limit", p.long_word_limit);
      read_param(s, "long_penalty", p.long_penalty);
      read_param(s, "repeat_ngram", p.repeat_ngram);
      read_param(s, "repeat_min_count", p.repeat_min_count);
      read_param(s, "repeat_penalty", p.repeat_penalty);
      read_param(s, "min_ascii_ratio", p.min_ascii_ratio);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("keyword config: ") + e.what());
  }
  if (cfg.positive.empty()) throw ConfigError("keyword config: no positive classes");
  if (cfg.scoring.length_scale <= 0.0) throw ConfigError("keyword config: length_scale must be > 0");
  if (cfg.scoring.clause_saturation <= 0) {
    throw ConfigError("keyword config: clause_saturation must be > 0");
  }
  return cfg;
}

Json to_json(const PromptCandidate& v) {
  Json j = Json::object();
  j["text"] = v.text;
  j["word_count"] = v.word_count;
  j["clause_count"] = v.clause_count;
  j["category"] = v.category;
  j["score"] = v.score;
  j["rejected_reason"] = v.rejected_reason ? Json(*v.rejected_reason) : Json(nullptr);
  return j;
}

PromptCandidate prompt_candidate_from_json(const Json& j) {
  PromptCandidate v;
  try {
    v.text = j.at("text").get<std::string>();
    v.word_count = j.value("word_count", 0);
    v.clause_count = j.value("clause_count", 0);
    v.category = j.value("category", std::string());
    v.score = j.value("score", 0.0);
    if (j.contains("rejected_reason") && !j.at("rejected_reason").is_null()) {
      v.rejected_reason = j.at("rejected_reason").get<std::string>();
    }
  } catch (const Json::exception& e) {
    throw ValidationError("", std::string("prompt candidate: ") + e.what());
  }
  return v;
}

bool contains_keyword(std::string_view text, std::string_view keyword) {
  if (keyword.empty()) return false;
  const std::string hay = lower_ascii(text);
  const std::string needle = lower_ascii(keyword);
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + 1)) {
    const bool left_ok = pos == 0 || !word_char(hay[pos - 1]);
    const std::size_t end = pos + needle.size();
    const bool right_ok = end == hay.size() || !word_char(hay[end]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

int count_words(std::string_view text) { return static_cast<int>(split_words(text).size()); }

int count_clauses(std::string_view text) {
  const std::string s = lower_ascii(text);
  int n = 0;
  for (char c : s) n += (c == ',' || c == ';') ? 1 : 0;
  for (std::string_view sep : {std::string_view(" and "), std::string_view(" with ")}) {
    for (std::size_t pos = s.find(sep); pos != std::string::npos; pos = s.find(sep, pos + 1)) ++n;
  }
  return n;
}

double length_curve(int words, const ScoringParams& p) {
  return 1.0 / (1.0 + std::exp(-(static_cast<double>(words) - p.length_center) / p.length_scale));
}

double ascii_ratio(std::string_view text) {
  std::size_t letters = 0, ascii = 0;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) continue;
    // Count code points: skip UTF-8 continuation bytes.
    if ((u & 0xC0) == 0x80) continue;
    ++letters;
    if (u < 0x80) ++ascii;
  }
  return letters == 0 ? 1.0 : static_cast<double>(ascii) / static_cast<double>(letters);
}

PromptCandidate score_prompt(std::string_view text, const KeywordConfig& config) {
  if (text.empty()) throw std::invalid_argument("score_prompt: empty text");
  const auto& p = config.scoring;
  const auto words = split_words(text);

  PromptCandidate out;
  out.text = std::string(text);
  out.word_count = static_cast<int>(words.size());
  out.clause_count = count_clauses(text);

  const double clause_term =
      std::min(1.0, static_cast<double>(out.clause_count) / p.clause_saturation);
  const bool photo = std::any_of(config.photo.begin(), config.photo.end(),
                                 [&](const std::string& k) { return contains_keyword(text, k); });
  double score = p.length_weight * length_curve(out.word_count, p) + p.clause_weight * clause_term +
                 (photo ? p.photo_bonus : 0.0);
  if (out.word_count > p.long_word_limit) score -= p.long_penalty;
  if (repeats_ngram(words, p.repeat_ngram, p.repeat_min_count)) score -= p.repeat_penalty;
  out.score = std::max(0.0, score);

  out.category = config.default_category;
  for (const auto& cls : config.positive) {
    const bool hit = std::any_of(cls.keywords.begin(), cls.keywords.end(),
                                 [&](const std::string& k) { return contains_keyword(text, k); });
    if (hit) {
      out.category = cls.name;
      break;
    }
  }
  return out;
}

FilterResult filter_prompts(std::span<const std::string> corpus, const KeywordConfig& config) {
  FilterResult out;
  for (const auto& text : corpus) {
    const bool blank = std::all_of(text.begin(), text.end(),
                                   [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (blank) {
      PromptCandidate c;
      c.text = text;
      c.rejected_reason = "empty";
      out.rejected.push_back(std::move(c));
      continue;
    }
    PromptCandidate c = score_prompt(text, config);
    for (const auto& cls : config.negative) {
      const bool hit = std::any_of(cls.keywords.begin(), cls.keywords.end(),
                                   [&](const std::string& k) { return contains_keyword(text, k); });
      if (hit) {
        c.rejected_reason = cls.name;
        break;
      }
    }
    if (!c.rejected_reason && ascii_ratio(text) < config.scoring.min_ascii_ratio) {
      c.rejected_reason = "non_english";
    }
    (c.rejected_reason ? out.rejected : out.accepted).push_back(std::move(c));
  }
  return out;
}

BalancedSelection balanced_select(std::span<const PromptCandidate> pool, std::size_t total,
                                  std::uint64_t seed) {
  if (total > pool.size()) throw Error("balanced_select: total exceeds pool size");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pool.size(); ++i) groups[pool[i].category].push_back(i);

  // Rank inside each category: score desc, ties broken by a seeded shuffle.
  Rng rng(seed);
  std::vector<std::uint64_t> tiebreak(pool.size());
  for (auto& t : tiebreak) t = rng.next();
  for (auto& [name, members] : groups) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      if (pool[a].score != pool[b].score) return pool[a].score > pool[b].score;
      if (tiebreak[a] != tiebreak[b]) return tiebreak[a] < tiebreak[b];
      return a < b;
    });
  }

  std::vector<std::pair<std::size_t, std::string>> by_size;
  for (const auto& [name, members] : groups) by_size.emplace_back(members.size(), name);
  std::sort(by_size.begin(), by_size.end());

  BalancedSelection out;
  std::size_t remaining = total;
  for (std::size_t i = 0; i < by_size.size(); ++i) {
    const auto& [size, name] = by_size[i];
    const std::size_t left = by_size.size() - i;
    const std::size_t share = i + 1 == by_size.size() ? remaining : remaining / left;
    const std::size_t quota = std::min(size, share);
    if (quota < share) {
      std::string line = "category " + name + " short by " + std::to_string(share - quota) +
                         "; backfilled from larger categories";
      log_info(line);
      out.log.push_back(std::move(line));
    }
    out.counts[name] = quota;
    remaining -= quota;
  }
  for (const auto& [name, members] : groups) {
    const std::size_t quota = out.counts[name];
    for (std::size_t j = 0; j < quota; ++j) out.selected.push_back(pool[members[j]]);
  }
  return out;
}

}  // namespace jf::select
