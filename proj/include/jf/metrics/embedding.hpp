#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jf/metrics/lexical.hpp"

namespace jf::metrics {

using Embedding = std::vector<double>;

// Maps tokens to unit-norm vectors, one per token.
using TokenEmbedder = std::function<std::vector<Embedding>(std::span<const std::string>)>;

double dot(const Embedding& a, const Embedding& b);

// Greedy max-cosine matching without idf weighting: precision averages, over
// candidate tokens, the best similarity to any reference token; recall is the
// mirror image. Embedder failure or empty input yields a skip.
PrfScore embed_match(TokenSpan candidate, TokenSpan reference, const TokenEmbedder& embedder);

}  // namespace jf::metrics
