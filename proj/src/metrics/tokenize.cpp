#include "jf/metrics/tokenize.hpp"

#include <cctype>
#include <locale>
#include <optional>

namespace jf::metrics {
namespace {

const std::ctype<wchar_t>* unicode_ctype() {
  static const std::ctype<wchar_t>* facet = []() -> const std::ctype<wchar_t>* {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        static const std::locale loc(name);
        return &std::use_facet<std::ctype<wchar_t>>(loc);
      } catch (const std::exception&) {
      }
    }
    return nullptr;
  }();
  return facet;
}

// Decodes one code point; returns nullopt for an invalid sequence (one byte is consumed).
std::optional<char32_t> decode(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  int len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++i;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return std::nullopt;
  }
  if (i + len > s.size()) {
    ++i;
    return std::nullopt;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return std::nullopt;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_space(char32_t cp, const std::ctype<wchar_t>* ct) {
  if (cp < 0x80) return std::isspace(static_cast<int>(cp)) != 0;
  return ct && ct->is(std::ctype_base::space, static_cast<wchar_t>(cp));
}

bool is_punct(char32_t cp, const std::ctype<wchar_t>* ct) {
  if (cp < 0x80) return std::ispunct(static_cast<int>(cp)) != 0;
  return ct && ct->is(std::ctype_base::punct, static_cast<wchar_t>(cp));
}

char32_t lower(char32_t cp, const std::ctype<wchar_t>* ct) {
  if (cp < 0x80) return static_cast<char32_t>(std::tolower(static_cast<int>(cp)));
  return ct ? static_cast<char32_t>(ct->tolower(static_cast<wchar_t>(cp))) : cp;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  const auto* ct = unicode_ctype();
  Tokens out;
  std::string current;
  bool all_punct = true;
  auto flush = [&] {
    if (!current.empty() && !all_punct) out.push_back(current);
    current.clear();
    all_punct = true;
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const auto cp = decode(text, i);
    if (!cp) {
      current.append(text.substr(start, i - start));
      all_punct = false;
      continue;
    }
    if (is_space(*cp, ct)) {
      flush();
      continue;
    }
    if (!is_punct(*cp, ct)) all_punct = false;
    encode(lower(*cp, ct), current);
  }
  flush();
  return out;
}

}  // namespace jf::metrics
