#include "jf/metrics/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace jf::metrics {
namespace {

// Token sequences mapped to dense integer ids shared between both sides.
struct Interned {
  std::vector<int> cand;
  std::vector<int> ref;
};

Interned intern(TokenSpan candidate, TokenSpan reference) {
  std::unordered_map<std::string_view, int> ids;
  auto id_of = [&](const std::string& t) {
    auto [it, inserted] = ids.try_emplace(t, static_cast<int>(ids.size()));
    return it->second;
  };
  Interned out;
  out.cand.reserve(candidate.size());
  out.ref.reserve(reference.size());
  for (const auto& t : candidate) out.cand.push_back(id_of(t));
  for (const auto& t : reference) out.ref.push_back(id_of(t));
  return out;
}

// Start positions of all n-grams, sorted by their token content.
std::vector<std::size_t> sorted_ngrams(const std::vector<int>& seq, std::size_t n) {
  std::vector<std::size_t> starts;
  if (seq.size() < n) return starts;
  starts.resize(seq.size() - n + 1);
  for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = i;
  std::sort(starts.begin(), starts.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(seq.begin() + a, seq.begin() + a + n, seq.begin() + b,
                                        seq.begin() + b + n);
  });
  return starts;
}

int compare_ngram(const std::vector<int>& a, std::size_t ia, const std::vector<int>& b,
                  std::size_t ib, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    if (a[ia + k] != b[ib + k]) return a[ia + k] < b[ib + k] ? -1 : 1;
  }
  return 0;
}

struct Overlap {
  std::size_t matches = 0;
  std::size_t cand_total = 0;
  std::size_t ref_total = 0;
};

// Clipped overlap: sum over distinct n-grams of min(count in cand, count in ref).
Overlap ngram_overlap(const Interned& s, std::size_t n) {
  const auto c = sorted_ngrams(s.cand, n);
  const auto r = sorted_ngrams(s.ref, n);
  Overlap out{0, c.size(), r.size()};
  std::size_t i = 0, j = 0;
  while (i < c.size() && j < r.size()) {
    const int cmp = compare_ngram(s.cand, c[i], s.ref, r[j], n);
    if (cmp < 0) {
      ++i;
    } else if (cmp > 0) {
      ++j;
    } else {
      std::size_t ci = i, rj = j;
      while (ci < c.size() && compare_ngram(s.cand, c[ci], s.cand, c[i], n) == 0) ++ci;
      while (rj < r.size() && compare_ngram(s.ref, r[rj], s.ref, r[j], n) == 0) ++rj;
      out.matches += std::min(ci - i, rj - j);
      i = ci;
      j = rj;
    }
  }
  return out;
}

BleuResult combine(const std::vector<std::size_t>& matches,
                   const std::vector<std::size_t>& totals, std::size_t c, std::size_t r,
                   bool smoothing) {
  BleuResult out;
  const std::size_t max_n = matches.size();
  out.cumulative.assign(max_n, 0.0);
  out.precisions.assign(max_n, 0.0);
  if (c == 0) {
    out.skipped = true;
    return out;
  }
  out.brevity_penalty =
      c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t k = 0; k < max_n; ++k) {
    double p = 0.0;
    if (totals[k] > 0) {
      if (matches[k] > 0) {
        p = static_cast<double>(matches[k]) / static_cast<double>(totals[k]);
      } else if (smoothing) {
        p = 1.0 / static_cast<double>(totals[k] + 1);
      }
    }
    out.precisions[k] = p;
    if (p <= 0.0) zero = true;
    if (!zero) {
      log_sum += std::log(p);
      out.cumulative[k] = out.brevity_penalty * std::exp(log_sum / static_cast<double>(k + 1));
    }
  }
  return out;
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

BleuResult bleu(TokenSpan candidate, TokenSpan reference, int max_n, bool smoothing) {
  if (max_n < 1) throw std::invalid_argument("bleu: max_n must be >= 1");
  const auto s = intern(candidate, reference);
  std::vector<std::size_t> matches(max_n), totals(max_n);
  for (int n = 1; n <= max_n; ++n) {
    const auto o = ngram_overlap(s, static_cast<std::size_t>(n));
    matches[n - 1] = o.matches;
    totals[n - 1] = o.cand_total;
  }
  return combine(matches, totals, candidate.size(), reference.size(), smoothing);
}

CorpusBleu::CorpusBleu(int max_n) : max_n_(max_n), matches_(max_n), totals_(max_n) {
  if (max_n < 1) throw std::invalid_argument("bleu: max_n must be >= 1");
}

void CorpusBleu::add(TokenSpan candidate, TokenSpan reference) {
  const auto s = intern(candidate, reference);
  for (int n = 1; n <= max_n_; ++n) {
    const auto o = ngram_overlap(s, static_cast<std::size_t>(n));
    matches_[n - 1] += o.matches;
    totals_[n - 1] += o.cand_total;
  }
  candidate_length_ += candidate.size();
  reference_length_ += reference.size();
}

BleuResult CorpusBleu::score() const {
  return combine(matches_, totals_, candidate_length_, reference_length_, false);
}

std::size_t lcs_length(TokenSpan a, TokenSpan b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PrfScore rouge(TokenSpan candidate, TokenSpan reference, RougeVariant variant) {
  PrfScore out;
  if (candidate.empty() || reference.empty()) {
    out.skipped = true;
    return out;
  }
  double overlap = 0.0, cand_total = 0.0, ref_total = 0.0;
  if (variant == RougeVariant::rougeL) {
    overlap = static_cast<double>(lcs_length(candidate, reference));
    cand_total = static_cast<double>(candidate.size());
    ref_total = static_cast<double>(reference.size());
  } else {
    const std::size_t n = variant == RougeVariant::rouge1 ? 1 : 2;
    const auto o = ngram_overlap(intern(candidate, reference), n);
    overlap = static_cast<double>(o.matches);
    cand_total = static_cast<double>(o.cand_total);
    ref_total = static_cast<double>(o.ref_total);
  }
  out.precision = cand_total > 0.0 ? overlap / cand_total : 0.0;
  out.recall = ref_total > 0.0 ? overlap / ref_total : 0.0;
  out.f1 = f1_of(out.precision, out.recall);
  return out;
}

namespace {

// Depth-first search over alignments of candidate positions to reference
// positions holding the same token. Only maximum-cardinality alignments are
// explored; the objective is the number of adjacent match pairs
// (i -> j, i+1 -> j+1), since chunks = matches - adjacencies.
class ChunkMinimizer {
 public:
  static constexpr std::size_t kNodeBudget = 1u << 20;

  ChunkMinimizer(const std::vector<int>& cand, const std::vector<int>& ref)
      : cand_(cand), ref_(ref), used_(ref.size(), 0), assign_(cand.size(), -1) {
    int vocab = 0;
    for (int t : cand_) vocab = std::max(vocab, t + 1);
    for (int t : ref_) vocab = std::max(vocab, t + 1);
    positions_.resize(vocab);
    for (std::size_t j = 0; j < ref_.size(); ++j) positions_[ref_[j]].push_back(j);
    std::vector<std::size_t> cand_count(vocab, 0);
    for (int t : cand_) ++cand_count[t];
    skips_left_.resize(vocab, 0);
    for (int t = 0; t < vocab; ++t) {
      const std::size_t r = positions_[t].size();
      matches_ += std::min(cand_count[t], r);
      skips_left_[t] = cand_count[t] > r ? cand_count[t] - r : 0;
    }
    // possible_after_[i]: how many positions k >= i could still form an adjacency
    // with k-1, i.e. bigram (cand[k-1], cand[k]) occurs in the reference.
    possible_after_.assign(cand_.size() + 1, 0);
    for (std::size_t k = cand_.size(); k-- > 0;) {
      bool possible = false;
      if (k > 0) {
        for (std::size_t j = 1; j < ref_.size() && !possible; ++j) {
          possible = ref_[j - 1] == cand_[k - 1] && ref_[j] == cand_[k];
        }
      }
      possible_after_[k] = possible_after_[k + 1] + (possible ? 1 : 0);
    }
  }

  std::size_t matches() const { return matches_; }

  std::size_t solve() {
    if (matches_ == 0) return 0;
    search(0, 0);
    return best_;
  }

  bool exhausted_budget() const { return nodes_ >= kNodeBudget; }

 private:
  void search(std::size_t i, std::size_t adjacencies) {
    if (nodes_ >= kNodeBudget) return;
    ++nodes_;
    if (found_ && adjacencies + possible_after_[i] <= best_) return;
    if (i == cand_.size()) {
      if (!found_ || adjacencies > best_) best_ = adjacencies;
      found_ = true;
      return;
    }
    const int tok = cand_[i];
    const int prev = i > 0 ? assign_[i - 1] : -1;
    // Extending the previous chunk first makes the first leaf a greedy alignment.
    if (prev >= 0 && static_cast<std::size_t>(prev) + 1 < ref_.size() &&
        ref_[prev + 1] == tok && !used_[prev + 1]) {
      place(i, static_cast<std::size_t>(prev) + 1, adjacencies + 1);
    }
    for (std::size_t j : positions_[tok]) {
      if (used_[j] || (prev >= 0 && j == static_cast<std::size_t>(prev) + 1)) continue;
      place(i, j, adjacencies);
    }
    if (skips_left_[tok] > 0) {
      --skips_left_[tok];
      assign_[i] = -1;
      search(i + 1, adjacencies);
      ++skips_left_[tok];
    }
  }

  void place(std::size_t i, std::size_t j, std::size_t adjacencies) {
    used_[j] = 1;
    assign_[i] = static_cast<int>(j);
    search(i + 1, adjacencies);
    assign_[i] = -1;
    used_[j] = 0;
  }

  const std::vector<int>& cand_;
  const std::vector<int>& ref_;
  std::vector<std::vector<std::size_t>> positions_;
  std::vector<std::size_t> skips_left_;
  std::vector<char> used_;
  std::vector<int> assign_;
  std::vector<std::size_t> possible_after_;
  std::size_t matches_ = 0;
  std::size_t best_ = 0;
  bool found_ = false;
  std::size_t nodes_ = 0;
};

}  // namespace

MeteorResult meteor(TokenSpan candidate, TokenSpan reference) {
  MeteorResult out;
  if (candidate.empty() || reference.empty()) return out;
  const auto s = intern(candidate, reference);
  ChunkMinimizer search(s.cand, s.ref);
  out.matches = search.matches();
  if (out.matches == 0) return out;
  const std::size_t adjacencies = search.solve();
  out.exact_alignment = !search.exhausted_budget();
  out.chunks = out.matches - adjacencies;
  const double m = static_cast<double>(out.matches);
  const double p = m / static_cast<double>(candidate.size());
  const double r = m / static_cast<double>(reference.size());
  out.fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(out.chunks) / m;
  out.penalty = 0.5 * frag * frag * frag;
  out.score = out.fmean * (1.0 - out.penalty);
  return out;
}

}  // namespace jf::metrics
