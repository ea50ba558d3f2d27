#include "jf/select/manifest.hpp"

#include "jf/core/error.hpp"
#include "jf/core/log.hpp"
#include "jf/core/rng.hpp"
#include "jf/core/serialize.hpp"

namespace jf::select {

Json to_json(const ManifestEntry& v) {
  Json j = Json::object();
  j["prompt"] = v.prompt;
  j["category"] = v.category;
  j["score"] = v.score;
  j["model_tag"] = v.model_tag;
  j["seed"] = v.seed;
  return j;
}

ManifestEntry manifest_entry_from_json(const Json& j) {
  ManifestEntry v;
  try {
    v.prompt = j.at("prompt").get<std::string>();
    v.category = j.at("category").get<std::string>();
    v.score = j.at("score").get<double>();
    v.model_tag = j.at("model_tag").get<std::string>();
    v.seed = j.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw ValidationError("", std::string("manifest entry: ") + e.what());
  }
  return v;
}

std::vector<ManifestEntry> build_manifest(std::span<const PromptCandidate> selection,
                                          const std::string& model_tag, std::uint64_t base_seed) {
  if (selection.empty()) log_warning("manifest: empty selection");
  std::vector<ManifestEntry> out;
  out.reserve(selection.size());
  for (std::size_t i = 0; i < selection.size(); ++i) {
    out.push_back({selection[i].text, selection[i].category, selection[i].score, model_tag,
                   derive_seed(base_seed, std::to_string(i))});
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::vector<Json> rows;
  rows.reserve(entries.size());
  for (const auto& e : entries) rows.push_back(to_json(e));
  write_jsonl(path, rows);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::vector<ManifestEntry> out;
  for (const auto& j : read_jsonl(path)) out.push_back(manifest_entry_from_json(j));
  return out;
}

}  // namespace jf::select
