#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "jf/metrics/tokenize.hpp"

namespace jf::metrics {

using TokenSpan = std::span<const std::string>;

struct BleuResult {
  // cumulative[n-1] is BLEU-n: brevity penalty times the geometric mean of
  // the modified precisions of orders 1..n.
  std::vector<double> cumulative;
  std::vector<double> precisions;
  double brevity_penalty = 0.0;
  bool skipped = false;
};

// Sentence BLEU against a single reference. Without smoothing an order with
// no clipped matches zeroes every cumulative score from that order upward;
// with smoothing such orders use (0 + 1) / (total + 1).
BleuResult bleu(TokenSpan candidate, TokenSpan reference, int max_n, bool smoothing = false);

// Corpus BLEU: clipped counts and lengths are summed before the precisions
// are formed. Never smoothed.
class CorpusBleu {
 public:
  explicit CorpusBleu(int max_n);
  void add(TokenSpan candidate, TokenSpan reference);
  BleuResult score() const;

 private:
  int max_n_;
  std::vector<std::size_t> matches_;
  std::vector<std::size_t> totals_;
  std::size_t candidate_length_ = 0;
  std::size_t reference_length_ = 0;
};

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool skipped = false;
};

enum class RougeVariant { rouge1, rouge2, rougeL };

// ROUGE-1/2 from clipped n-gram overlap; ROUGE-L from the longest common
// subsequence. Empty input on either side is a skip.
PrfScore rouge(TokenSpan candidate, TokenSpan reference, RougeVariant variant);

std::size_t lcs_length(TokenSpan a, TokenSpan b);

struct MeteorResult {
  double score = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  std::size_t matches = 0;
  std::size_t chunks = 0;
  // False when the alignment search hit its node budget and returned the best
  // alignment found so far rather than a proven optimum.
  bool exact_alignment = true;
};

// Exact-match METEOR. The alignment maximizes matched unigrams and, among
// those, minimizes chunks.
// Fmean = 10PR / (R + 9P), penalty = 0.5 * (chunks / matches)^3.
MeteorResult meteor(TokenSpan candidate, TokenSpan reference);

}  // namespace jf::metrics
