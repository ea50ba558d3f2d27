#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jf/core/types.hpp"

namespace jf {

struct FlagDefinition {
  std::string name;
  std::string check;
  std::string pass;
  std::string fail;
};

// Forensic cue list that annotators attach to regions. Always loaded from a
// versioned config file.
class FlagTaxonomy {
 public:
  FlagTaxonomy(int version, std::vector<FlagDefinition> flags);

  static FlagTaxonomy load(const std::filesystem::path& path);
  static FlagTaxonomy from_json(const Json& doc);

  int version() const noexcept { return version_; }
  const std::vector<FlagDefinition>& flags() const noexcept { return flags_; }
  bool contains(std::string_view name) const;

  // Numbered "name - check / PASS / FAIL" lines for prompt rendering.
  std::string describe() const;
  Json to_json() const;

 private:
  int version_;
  std::vector<FlagDefinition> flags_;
};

// Structural validation plus flag names checked against the taxonomy.
void validate(const HumanAnnotation& annotation, const FlagTaxonomy& taxonomy);

}  // namespace jf
