#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "jf/core/types.hpp"

namespace jf {

using PlaceholderMap = std::map<std::string, std::string>;

// Text with `${name}` placeholders. Any other `$` or brace is literal, so
// prompts that embed JSON examples need no escaping.
class PromptTemplate {
 public:
  PromptTemplate(TemplateName name, std::string text);

  TemplateName name() const noexcept { return name_; }
  const std::string& text() const noexcept { return text_; }

  // Distinct placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;

  // Throws ValidationError("placeholder.<name>") when a value is missing.
  std::string render(const PlaceholderMap& values) const;

 private:
  TemplateName name_;
  std::string text_;
};

// One `<template-name>.txt` file per TemplateName.
class PromptLibrary {
 public:
  static PromptLibrary load(const std::filesystem::path& dir);

  void add(PromptTemplate t);
  const PromptTemplate& get(TemplateName name) const;
  bool has(TemplateName name) const;

 private:
  std::map<TemplateName, PromptTemplate> templates_;
};

}  // namespace jf
