#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace jf::metrics {

using Tokens = std::vector<std::string>;

// Lowercases (Unicode-aware where the C.UTF-8 locale is available), splits on
// whitespace and drops tokens made only of punctuation. Invalid UTF-8 bytes
// pass through unchanged.
Tokens tokenize(std::string_view text);

}  // namespace jf::metrics
