#include "jf/bootstrap/fidelity.hpp"

#include <stdexcept>

#include "jf/metrics/lexical.hpp"
#include "jf/metrics/tokenize.hpp"

namespace jf::bootstrap {

Json FidelityReport::to_json() const {
  return Json{{"mean_embed_score", mean_embed_score},
              {"mean_bleu", mean_bleu},
              {"pairs", pairs},
              {"embed_skipped", embed_skipped},
              {"bleu_skipped", bleu_skipped}};
}

FidelityReport verify_paraphrase_fidelity(const std::vector<std::string>& originals,
                                          const std::vector<std::string>& variants,
                                          const metrics::TokenEmbedder& embedder) {
  if (originals.size() != variants.size()) {
    throw std::invalid_argument("fidelity: originals and variants differ in length");
  }
  FidelityReport out;
  out.pairs = originals.size();
  double embed_sum = 0.0, bleu_sum = 0.0;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    const auto ref = metrics::tokenize(originals[i]);
    const auto cand = metrics::tokenize(variants[i]);
    const auto e = metrics::embed_match(cand, ref, embedder);
    if (e.skipped) {
      ++out.embed_skipped;
    } else {
      embed_sum += e.f1;
    }
    const auto b = metrics::bleu(cand, ref, 4);
    if (b.skipped || ref.empty()) {
      ++out.bleu_skipped;
    } else {
      bleu_sum += b.cumulative[3];
    }
  }
  if (out.pairs > out.embed_skipped) out.mean_embed_score = embed_sum / double(out.pairs - out.embed_skipped);
  if (out.pairs > out.bleu_skipped) out.mean_bleu = bleu_sum / double(out.pairs - out.bleu_skipped);
  return out;
}

void collect_paraphrase_pairs(const std::vector<BootstrapRecord>& records,
                              std::vector<std::string>& originals, std::vector<std::string>& variants) {
  for (const auto& rec : records) {
    if (rec.gold) {
      for (const auto& v : rec.gold_variants) {
        originals.push_back(rec.gold->text);
        variants.push_back(v.text);
      }
    }
    for (const auto& [r, list] : rec.accepted) {
      for (std::size_t i = 1; i < list.size(); ++i) {
        originals.push_back(list.front().text);
        variants.push_back(list[i].text);
      }
    }
  }
}

}  // namespace jf::bootstrap
