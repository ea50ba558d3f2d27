#pragma once

#include <filesystem>

#include "jf/core/types.hpp"

namespace jf {

// Reads a TOML document into the JSON object model. Tables become objects,
// arrays stay arrays, dates and times become their TOML text form.
Json load_toml(const std::filesystem::path& path);
Json parse_toml(std::string_view text, std::string_view source_name = "<string>");

}  // namespace jf
