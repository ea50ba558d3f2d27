#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "jf/assemble/assembler.hpp"
#include "jf/core/prompt_template.hpp"
#include "jf/eval/report.hpp"
#include "jf/eval/run_spec.hpp"
#include "jf/gateway/gateway.hpp"

namespace jf::eval {

// Reference rationale for the reason protocol.
struct ReasonItem {
  std::string sample_id;
  std::string image_ref;
  Label label = Label::real;
  std::string reference;
};

Json to_json(const ReasonItem& v);
ReasonItem reason_item_from_json(const Json& j);
// Gold responses of complete records.
std::vector<ReasonItem> reason_items(const std::vector<BootstrapRecord>& records);

// Append-only store of raw replies keyed by (item id, model, prompt hash).
// A torn final line from an interrupted run is ignored on load.
class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path path);

  std::optional<std::string> get(const std::string& item_id, const std::string& model,
                                 const std::string& prompt_hash) const;
  void put(const std::string& item_id, const std::string& model, const std::string& prompt_hash,
           const std::string& reply);
  std::size_t size() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  static std::string key(const std::string& item_id, const std::string& model, const std::string& hash);

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> entries_;
};

std::string prompt_hash(const std::string& prompt);

// Reads the rationale out of <think> or <reasoning>, else the whole text.
std::string rationale_of(const std::string& text);

class Harness {
 public:
  Harness(gateway::Gateway& gw, const PromptLibrary& prompts, RunSpec spec);

  MetricReport run_pointwise(const std::vector<PointwiseItem>& items);
  MetricReport run_pairwise(const std::vector<PairwiseItem>& items);
  MetricReport run_detect(const std::vector<Sample>& samples);
  // `judge` may be null; the DFJ column is then left out.
  MetricReport run_reason(const std::vector<ReasonItem>& items, gateway::Gateway* judge);

  // Gateway calls made (cache misses) by the last run.
  std::size_t fresh_calls() const noexcept { return fresh_calls_; }
  std::size_t failures() const noexcept { return failures_; }

 private:
  struct Query {
    std::string item_id;
    std::string prompt;
    std::string image;
  };

  std::vector<std::optional<std::string>> ask(gateway::Gateway& gw, ResultCache& cache,
                                              const std::vector<Query>& queries, const std::string& model,
                                              const std::string& purpose);
  std::vector<std::size_t> slice(std::size_t n) const;
  std::filesystem::path cache_path(const std::string& model, const std::string& suffix = "") const;
  MetricReport finish(std::vector<metrics::MetricValue> values, std::size_t items, Json extra = {});

  gateway::Gateway& gw_;
  const PromptLibrary& prompts_;
  RunSpec spec_;
  std::size_t fresh_calls_ = 0;
  std::size_t failures_ = 0;
};

// Loads the dataset named by the spec, runs the protocol, and writes
// report.json and report.md into spec.out_dir.
MetricReport run_spec(const RunSpec& spec, gateway::Gateway& gw, const PromptLibrary& prompts,
                      gateway::Gateway* judge = nullptr);

}  // namespace jf::eval
