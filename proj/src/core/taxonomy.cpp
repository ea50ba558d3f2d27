#include "jf/core/taxonomy.hpp"

#include <set>

#include "jf/core/config.hpp"
#include "jf/core/error.hpp"

namespace jf {

FlagTaxonomy::FlagTaxonomy(int version, std::vector<FlagDefinition> flags)
    : version_(version), flags_(std::move(flags)) {
  if (flags_.empty()) throw ConfigError("flag taxonomy is empty");
  std::set<std::string> names;
  for (const auto& f : flags_) {
    if (f.name.empty()) throw ConfigError("flag taxonomy entry without a name");
    if (!names.insert(f.name).second) throw ConfigError("duplicate flag \"" + f.name + "\"");
  }
}

FlagTaxonomy FlagTaxonomy::load(const std::filesystem::path& path) {
  return from_json(load_toml(path));
}

FlagTaxonomy FlagTaxonomy::from_json(const Json& doc) {
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw ConfigError("flag taxonomy needs an integer 'version'");
  }
  if (!doc.contains("flag") || !doc["flag"].is_array()) {
    throw ConfigError("flag taxonomy needs [[flag]] entries");
  }
  std::vector<FlagDefinition> flags;
  for (const auto& f : doc["flag"]) {
    FlagDefinition d;
    d.name = f.value("name", "");
    d.check = f.value("check", "");
    d.pass = f.value("pass", "");
    d.fail = f.value("fail", "");
    flags.push_back(std::move(d));
  }
  return FlagTaxonomy(doc["version"].get<int>(), std::move(flags));
}

bool FlagTaxonomy::contains(std::string_view name) const {
  for (const auto& f : flags_) {
    if (f.name == name) return true;
  }
  return false;
}

std::string FlagTaxonomy::describe() const {
  std::string out;
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    const auto& f = flags_[i];
    out += std::to_string(i + 1) + ") " + f.name;
    if (!f.check.empty()) out += " - " + f.check;
    if (!f.pass.empty()) out += " PASS: " + f.pass;
    if (!f.fail.empty()) out += " FAIL: " + f.fail;
    out += '\n';
  }
  return out;
}

Json FlagTaxonomy::to_json() const {
  Json out = Json::object();
  out["version"] = version_;
  out["flag"] = Json::array();
  for (const auto& f : flags_) {
    out["flag"].push_back({{"name", f.name}, {"check", f.check}, {"pass", f.pass},
                            {"fail", f.fail}});
  }
  return out;
}

void validate(const HumanAnnotation& annotation, const FlagTaxonomy& taxonomy) {
  validate(annotation);
  for (std::size_t i = 0; i < annotation.flags.size(); ++i) {
    if (!taxonomy.contains(annotation.flags[i].flag_name)) {
      throw ValidationError("flags[" + std::to_string(i) + "].flag_name",
                            "unknown flag \"" + annotation.flags[i].flag_name + "\"");
    }
  }
}

}  // namespace jf
