#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jf/core/types.hpp"

namespace jf::select {

struct LabeledImage {
  std::string image_id;
  std::vector<std::string> label_set;
  bool verified = false;
  Json extra = Json::object();

  bool operator==(const LabeledImage&) const = default;
};

Json to_json(const LabeledImage& v);
LabeledImage labeled_image_from_json(const Json& j);

struct CoverStep {
  std::size_t index = 0;  // position in the pool
  std::size_t gain = 0;   // newly covered labels at the time of the pick
};

struct CoverSelection {
  std::vector<CoverStep> steps;
  std::size_t covered_labels = 0;
  std::size_t total_labels = 0;

  std::vector<std::size_t> indices() const;
};

// Stochastic greedy maximum coverage. Each step ranks the remaining images by
// (marginal gain desc, pool index asc) and draws uniformly among the first
// `window` of them. window = 1 is plain greedy.
CoverSelection greedy_set_cover(std::span<const LabeledImage> pool, std::size_t k,
                                std::uint64_t seed, std::size_t window = 3);

struct ReservedSelection {
  CoverSelection selection;
  // Reserved images, disjoint from the selection, drawn uniformly from the rest.
  std::vector<std::size_t> reserved;
};

ReservedSelection select_with_reserve(std::span<const LabeledImage> pool, std::size_t k,
                                      std::size_t reserve, std::uint64_t seed,
                                      std::size_t window = 3);

// Number of distinct labels covered by the chosen pool positions.
std::size_t coverage(std::span<const LabeledImage> pool, std::span<const std::size_t> chosen);

}  // namespace jf::select
