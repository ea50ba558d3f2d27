#include "jf/metrics/parsers.hpp"

#include <cctype>

namespace jf::metrics {
namespace {

char fold(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::size_t find_ci(std::string_view hay, std::string_view needle, std::size_t from) {
  if (needle.empty() || hay.size() < needle.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
    std::size_t k = 0;
    while (k < needle.size() && fold(hay[i + k]) == fold(needle[k])) ++k;
    if (k == needle.size()) return i;
  }
  return std::string_view::npos;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = fold(c);
  return out;
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<std::string> extract_tag(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const std::size_t start = find_ci(text, open, 0);
  if (start == std::string_view::npos) return std::nullopt;
  const std::size_t body = start + open.size();
  const std::size_t end = find_ci(text, close, body);
  if (end == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(body, end - body));
}

std::optional<PointwiseVerdict> parse_pointwise(std::string_view text) {
  const auto score = extract_tag(text, "score");
  if (!score) return std::nullopt;
  const std::string digits = trim(*score);
  if (digits.empty() || digits.size() > 3) return std::nullopt;
  int value = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const char c = digits[i];
    if (i == 0 && c == '+' && digits.size() > 1) continue;
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  if (value < kMinRating || value > kMaxRating) return std::nullopt;
  PointwiseVerdict out;
  out.rating = value;
  if (auto why = extract_tag(text, "reasoning")) out.rationale = trim(*why);
  return out;
}

std::optional<Choice> parse_pairwise(std::string_view text) {
  const auto answer = extract_tag(text, "answer");
  if (!answer) return std::nullopt;
  const std::string v = lower(trim(*answer));
  if (v == "a") return Choice::A;
  if (v == "b") return Choice::B;
  return std::nullopt;
}

std::optional<Label> parse_detect(std::string_view text) {
  const auto answer = extract_tag(text, "answer");
  if (!answer) return std::nullopt;
  const std::string v = lower(trim(*answer));
  if (v == "real") return Label::real;
  if (v == "fake") return Label::fake;
  if (v == "edited") return Label::edited;
  return std::nullopt;
}

}  // namespace jf::metrics
