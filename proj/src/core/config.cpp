#include "jf/core/config.hpp"

#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "jf/core/error.hpp"

namespace jf {
namespace {

Json convert(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    Json out = Json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = convert(v);
    return out;
  }
  if (const auto* a = node.as_array()) {
    Json out = Json::array();
    for (const auto& v : *a) out.push_back(convert(v));
    return out;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  std::ostringstream text;
  node.visit([&](const auto& v) { text << v; });
  return text.str();
}

}  // namespace

Json parse_toml(std::string_view text, std::string_view source_name) {
  try {
    return convert(toml::parse(text, source_name));
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source_name << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
}

Json load_toml(const std::filesystem::path& path) {
  try {
    return convert(toml::parse_file(path.string()));
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << path.string() << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
}

}  // namespace jf
