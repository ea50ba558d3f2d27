#include "jf/metrics/embedding.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace jf::metrics {

double dot(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

PrfScore embed_match(TokenSpan candidate, TokenSpan reference, const TokenEmbedder& embedder) {
  PrfScore out;
  if (candidate.empty() || reference.empty()) {
    out.skipped = true;
    return out;
  }
  std::vector<Embedding> cv, rv;
  try {
    cv = embedder(candidate);
    rv = embedder(reference);
    if (cv.size() != candidate.size() || rv.size() != reference.size()) {
      throw std::runtime_error("embedder returned wrong count");
    }
    std::vector<double> best_c(cv.size(), -std::numeric_limits<double>::infinity());
    std::vector<double> best_r(rv.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < cv.size(); ++i) {
      for (std::size_t j = 0; j < rv.size(); ++j) {
        const double s = dot(cv[i], rv[j]);
        best_c[i] = std::max(best_c[i], s);
        best_r[j] = std::max(best_r[j], s);
      }
    }
    double p = 0.0, r = 0.0;
    for (double v : best_c) p += v;
    for (double v : best_r) r += v;
    out.precision = p / static_cast<double>(cv.size());
    out.recall = r / static_cast<double>(rv.size());
    out.f1 = out.precision + out.recall > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
  } catch (const std::exception&) {
    out = PrfScore{};
    out.skipped = true;
  }
  return out;
}

}  // namespace jf::metrics
