#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "jf/select/prompt_filter.hpp"

namespace jf::select {

// One image-generation job. Synthesis itself happens outside this project.
struct ManifestEntry {
  std::string prompt;
  std::string category;
  double score = 0.0;
  std::string model_tag;
  std::uint64_t seed = 0;

  bool operator==(const ManifestEntry&) const = default;
};

Json to_json(const ManifestEntry& v);
ManifestEntry manifest_entry_from_json(const Json& j);

// Line i gets derive_seed(base_seed, i). Warns on an empty selection.
std::vector<ManifestEntry> build_manifest(std::span<const PromptCandidate> selection,
                                          const std::string& model_tag, std::uint64_t base_seed);

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace jf::select
