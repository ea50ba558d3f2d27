#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jf/core/prompt_template.hpp"
#include "jf/core/taxonomy.hpp"
#include "jf/core/types.hpp"
#include "jf/gateway/backend_config.hpp"
#include "jf/gateway/gateway.hpp"

namespace jf::bootstrap {

struct BootstrapConfig {
  int levels = 5;          // N, including the gold level
  int alpha = 0;           // acceptance threshold on |r - r_hat|
  int max_iterations = 3;  // T
  int paraphrase_k = 4;
  std::uint64_t seed = 0;
  double gen_temperature = 0.7;
  double eval_temperature = 0.0;
  double para_temperature = 0.7;
  int gold_format_retries = 2;
  int max_tokens = 2048;
  std::string paraphrase_instruction =
      "Decide whether the image is real, fully AI-generated (fake), or AI-edited, and justify "
      "the verdict with visible evidence.";
  gateway::ModelTags models;

  static BootstrapConfig from_json(const Json& doc, const gateway::EnvLookup& env = gateway::process_env());
};

// Throws ConfigError: N in 2..5, alpha >= 0, T >= 1, k >= 0.
void validate(const BootstrapConfig& cfg);

struct EvalOutcome {
  std::optional<EvalTrace> trace;
  std::string error;  // set when the reply could not be parsed or the call failed
  bool rationale_missing = false;
};

struct PendingLevel {
  ReasoningResponse candidate;
  int predicted_rating = 0;  // 0 when the evaluator reply was unusable
  std::string feedback;
};

// Generator/evaluator loop for one sample at a time. Safe to share between
// threads: it holds no per-sample state.
class BootstrapEngine {
 public:
  BootstrapEngine(gateway::Gateway& gw, const PromptLibrary& prompts, const FlagTaxonomy& taxonomy,
                  BootstrapConfig config);

  const BootstrapConfig& config() const noexcept { return config_; }

  // Throws FormatError after the re-asks are used up; ValidationError when the
  // annotation does not fit the label.
  ReasoningResponse make_gold(const Sample& sample, const HumanAnnotation* annotation) const;

  // Levels 1..N-1 from one p_gen call (plus one re-ask for missing keys).
  // Levels still missing are reported in `errors`.
  std::map<int, ReasoningResponse> generate_candidates(const Sample& sample,
                                                       const HumanAnnotation* annotation,
                                                       const ReasoningResponse& gold,
                                                       std::map<int, std::string>& errors) const;

  EvalOutcome evaluate_candidate(const Sample& sample, const HumanAnnotation* annotation,
                                 const ReasoningResponse& gold, const ReasoningResponse& candidate,
                                 int iteration) const;

  // One batched p_ref call for every pending level; returns revised
  // candidates with iteration + 1. Levels at iteration T are not sent.
  std::map<int, ReasoningResponse> refine(const Sample& sample, const HumanAnnotation* annotation,
                                          const ReasoningResponse& gold,
                                          const std::map<int, PendingLevel>& pending,
                                          std::map<int, std::string>& errors) const;

  // Up to k variants with variant_index 1..k. Variants that lose the tag
  // structure are re-asked once and then skipped with a note.
  std::vector<ReasoningResponse> paraphrase(const Sample& sample, const HumanAnnotation* annotation,
                                            const ReasoningResponse& response, int k,
                                            std::vector<std::string>& notes) const;

  BootstrapRecord bootstrap_sample(const Sample& sample, const HumanAnnotation* annotation) const;

  // Processes samples on up to `workers` threads; output sorted by sample id.
  std::vector<BootstrapRecord> bootstrap_all(std::span<const Sample> samples,
                                             const std::map<std::string, HumanAnnotation>& annotations,
                                             int workers) const;

  // Rendering helpers, exposed for tests.
  static std::string annotation_json(const HumanAnnotation* annotation);
  static std::string label_text(const Sample& sample);
  static std::string gold_flags_json(const HumanAnnotation* annotation);

 private:
  std::string chat(const std::string& prompt, const std::string& image, const std::string& model,
                   double temperature, const std::string& purpose) const;

  gateway::Gateway& gw_;
  const PromptLibrary& prompts_;
  const FlagTaxonomy& taxonomy_;
  BootstrapConfig config_;
};

// Variant count of a complete record: (1 + levels) * (1 + k) when nothing was skipped.
std::size_t variant_count(const BootstrapRecord& record);

}  // namespace jf::bootstrap
