#include "jf/bootstrap/reply_parsing.hpp"

#include <algorithm>
#include <cctype>

#include "jf/metrics/parsers.hpp"

namespace jf::bootstrap {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && lower(s.substr(0, prefix.size())) == prefix;
}

std::optional<int> number_in(const Json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<int>(d)) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string s = metrics::trim(v.get<std::string>());
    if (s.empty() || s.size() > 2) return std::nullopt;
    for (char c : s) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
    return std::stoi(s);
  }
  return std::nullopt;
}

std::optional<int> numbered_key(std::string_view key, std::string_view stem) {
  const std::string k = lower(metrics::trim(key));
  if (k.rfind(stem, 0) != 0) return std::nullopt;
  std::string_view rest(k);
  rest.remove_prefix(stem.size());
  while (!rest.empty() && (rest.front() == '_' || rest.front() == ' ' || rest.front() == '-')) {
    rest.remove_prefix(1);
  }
  if (rest.empty() || rest.size() > 3) return std::nullopt;
  int v = 0;
  for (char c : rest) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

std::optional<Json> extract_json_object(std::string_view text) {
  int budget = 256;
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    for (std::size_t end = text.rfind('}'); end != std::string_view::npos && end > start;
         end = end == 0 ? std::string_view::npos : text.rfind('}', end - 1)) {
      if (--budget < 0) return std::nullopt;
      Json j = Json::parse(text.substr(start, end - start + 1), nullptr, false);
      if (!j.is_discarded() && j.is_object()) return j;
    }
  }
  return std::nullopt;
}

std::optional<GoldReply> parse_gold_reply(std::string_view text) {
  const std::string body = metrics::trim(text);
  std::string_view s(body);
  if (!starts_with_ci(s, "<think>")) return std::nullopt;
  const std::string low = lower(s);
  const std::size_t close = low.find("</think>");
  if (close == std::string::npos) return std::nullopt;
  GoldReply out;
  out.think = metrics::trim(s.substr(7, close - 7));
  if (out.think.empty()) return std::nullopt;
  std::string_view rest = s.substr(close + 8);
  while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
  if (!starts_with_ci(rest, "<answer>")) return std::nullopt;
  rest.remove_prefix(8);
  std::string tail = lower(metrics::trim(rest));
  if (tail.size() >= 9 && tail.compare(tail.size() - 9, 9, "</answer>") == 0) {
    tail = metrics::trim(tail.substr(0, tail.size() - 9));
  }
  if (tail == "real") out.answer = Label::real;
  else if (tail == "fake") out.answer = Label::fake;
  else if (tail == "edited") out.answer = Label::edited;
  else return std::nullopt;
  std::string shown(to_string(out.answer));
  shown[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(shown[0])));
  out.canonical = "<think>" + out.think + "</think>\n<answer>" + shown + "</answer>";
  return out;
}

std::optional<int> rating_key(std::string_view key) { return numbered_key(key, "rating"); }

std::map<int, std::string> parse_rating_map(const Json& obj) {
  std::map<int, std::string> out;
  if (!obj.is_object()) return out;
  for (const auto& [key, value] : obj.items()) {
    const auto level = rating_key(key);
    if (!level || !value.is_string()) continue;
    const std::string text = metrics::trim(value.get<std::string>());
    if (!text.empty()) out.emplace(*level, text);
  }
  return out;
}

std::optional<EvalReply> parse_eval_reply(std::string_view text) {
  const auto obj = extract_json_object(text);
  if (!obj) return std::nullopt;
  const Json* entry = nullptr;
  if (obj->contains("rating")) {
    entry = &*obj;
  } else {
    for (const auto& [key, value] : obj->items()) {
      if (numbered_key(key, "candidate") == 1 && value.is_object()) entry = &value;
    }
    if (!entry && obj->size() == 1 && obj->begin()->is_object()) entry = &*obj->begin();
  }
  if (!entry || !entry->contains("rating")) return std::nullopt;
  const auto rating = number_in(entry->at("rating"));
  if (!rating || *rating < kMinRating || *rating > kMaxRating) return std::nullopt;
  EvalReply out;
  out.rating = *rating;
  if (entry->contains("rationale") && entry->at("rationale").is_string()) {
    out.rationale = entry->at("rationale").get<std::string>();
  } else {
    out.rationale_missing = true;
  }
  return out;
}

std::map<int, std::string> parse_paraphrases(const Json& obj) {
  std::map<int, std::string> out;
  if (!obj.is_object()) return out;
  for (const auto& [key, value] : obj.items()) {
    const auto idx = numbered_key(key, "paraphrase");
    if (!idx || *idx < 1 || !value.is_string()) continue;
    const std::string text = metrics::trim(value.get<std::string>());
    if (!text.empty()) out.emplace(*idx, text);
  }
  return out;
}

std::vector<std::string> tag_signature(std::string_view text) {
  std::vector<std::string> tags;
  for (std::size_t i = text.find('<'); i != std::string_view::npos; i = text.find('<', i + 1)) {
    std::size_t j = i + 1;
    if (j < text.size() && text[j] == '/') ++j;
    const std::size_t name_start = j;
    while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
    if (j == name_start || j >= text.size() || text[j] != '>') continue;
    tags.push_back(lower(text.substr(i, j - i + 1)));
  }
  std::sort(tags.begin(), tags.end());
  return tags;
}

}  // namespace jf::bootstrap
