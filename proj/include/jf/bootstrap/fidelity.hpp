#pragma once

#include <string>
#include <vector>

#include "jf/core/types.hpp"
#include "jf/metrics/embedding.hpp"

namespace jf::bootstrap {

struct FidelityReport {
  double mean_embed_score = 0.0;
  double mean_bleu = 0.0;
  std::size_t pairs = 0;
  std::size_t embed_skipped = 0;
  std::size_t bleu_skipped = 0;

  Json to_json() const;
};

// Mean embedding-match F1 and mean sentence BLEU-4 over aligned pairs.
// Skipped pairs are left out of the corresponding mean.
FidelityReport verify_paraphrase_fidelity(const std::vector<std::string>& originals,
                                          const std::vector<std::string>& variants,
                                          const metrics::TokenEmbedder& embedder);

// Pairs every paraphrase in the records with the response it was made from.
void collect_paraphrase_pairs(const std::vector<BootstrapRecord>& records,
                              std::vector<std::string>& originals, std::vector<std::string>& variants);

}  // namespace jf::bootstrap
