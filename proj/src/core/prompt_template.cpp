#include "jf/core/prompt_template.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "jf/core/error.hpp"

namespace jf {
namespace {

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_';
}

// Finds the next `${name}` at or after `from`; returns npos when none.
std::size_t next_placeholder(const std::string& text, std::size_t from, std::string& name,
                             std::size_t& end) {
  for (std::size_t pos = text.find("${", from); pos != std::string::npos;
       pos = text.find("${", pos + 1)) {
    std::size_t i = pos + 2;
    while (i < text.size() && is_name_char(text[i])) ++i;
    if (i > pos + 2 && i < text.size() && text[i] == '}') {
      name = text.substr(pos + 2, i - pos - 2);
      end = i + 1;
      return pos;
    }
  }
  return std::string::npos;
}

}  // namespace

PromptTemplate::PromptTemplate(TemplateName name, std::string text)
    : name_(name), text_(std::move(text)) {}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> out;
  std::string name;
  std::size_t end = 0;
  for (std::size_t pos = next_placeholder(text_, 0, name, end); pos != std::string::npos;
       pos = next_placeholder(text_, end, name, end)) {
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

std::string PromptTemplate::render(const PlaceholderMap& values) const {
  std::string out;
  out.reserve(text_.size());
  std::string name;
  std::size_t end = 0;
  std::size_t copied = 0;
  for (std::size_t pos = next_placeholder(text_, 0, name, end); pos != std::string::npos;
       pos = next_placeholder(text_, end, name, end)) {
    auto it = values.find(name);
    if (it == values.end()) {
      throw ValidationError("placeholder." + name,
                            "no value for template " + std::string(to_string(name_)));
    }
    out.append(text_, copied, pos - copied);
    out += it->second;
    copied = end;
  }
  out.append(text_, copied, std::string::npos);
  return out;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary lib;
  for (auto name : {TemplateName::gold_fake, TemplateName::gold_real, TemplateName::p_gen,
                    TemplateName::p_eval, TemplateName::p_ref, TemplateName::paraphrase,
                    TemplateName::pointwise_eval, TemplateName::pairwise_eval,
                    TemplateName::detect, TemplateName::reason}) {
    const auto path = dir / (std::string(to_string(name)) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    lib.add(PromptTemplate(name, buf.str()));
  }
  if (lib.templates_.empty()) throw ConfigError("no prompt templates found in " + dir.string());
  return lib;
}

void PromptLibrary::add(PromptTemplate t) {
  const auto name = t.name();
  templates_.insert_or_assign(name, std::move(t));
}

const PromptTemplate& PromptLibrary::get(TemplateName name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw ConfigError("prompt template \"" + std::string(to_string(name)) + "\" not loaded");
  }
  return it->second;
}

bool PromptLibrary::has(TemplateName name) const { return templates_.count(name) != 0; }

}  // namespace jf
