#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jf/core/serialize.hpp"
#include "jf/core/types.hpp"

namespace jf {

struct PointwiseItem {
  std::string sample_id;
  std::string image_ref;
  Label label = Label::real;
  std::string response_text;
  int target_rating = kMaxRating;

  bool operator==(const PointwiseItem&) const = default;
};

struct PairwiseItem {
  std::string sample_id;
  std::string image_ref;
  Label label = Label::real;
  std::string response_a;
  std::string response_b;
  Choice answer = Choice::A;
  int rating_a = 0;
  int rating_b = 0;
  // Coin draw that placed the higher-rated response: false puts it at A.
  bool swapped = false;

  bool operator==(const PairwiseItem&) const = default;
};

Json to_json(const PointwiseItem& v);
Json to_json(const PairwiseItem& v);
template <>
PointwiseItem from_json<PointwiseItem>(const Json& j);
template <>
PairwiseItem from_json<PairwiseItem>(const Json& j);
void validate(const PointwiseItem& item);
void validate(const PairwiseItem& item);

// "<sample_id>#<n>" where n counts earlier items of the same sample.
template <typename Item>
std::vector<std::string> item_ids(const std::vector<Item>& items) {
  std::vector<std::string> out;
  out.reserve(items.size());
  std::map<std::string, int> seen;
  for (const auto& it : items) out.push_back(it.sample_id + "#" + std::to_string(seen[it.sample_id]++));
  return out;
}

}  // namespace jf

namespace jf::assemble {

// Gold, its paraphrases, then every accepted level ascending.
std::vector<const ReasoningResponse*> responses_of(const BootstrapRecord& record);

// Incomplete records are skipped with a warning.
std::vector<PointwiseItem> build_pointwise(const std::vector<BootstrapRecord>& records);

std::vector<PairwiseItem> build_pairwise(const std::vector<BootstrapRecord>& records, int pairs_per_sample,
                                         std::uint64_t seed);

template <typename Item>
struct Split {
  std::vector<Item> train;
  std::vector<Item> test;
  // Set when the requested counts could not be met at sample granularity.
  std::string note;
};

// Whole samples go to one side. The test side is filled first, as close to
// test_count as sample groups allow, then train up to train_count.
template <typename Item>
Split<Item> split(const std::vector<Item>& dataset, std::size_t train_count, std::size_t test_count,
                  std::uint64_t seed);

extern template Split<PointwiseItem> split(const std::vector<PointwiseItem>&, std::size_t, std::size_t,
                                           std::uint64_t);
extern template Split<PairwiseItem> split(const std::vector<PairwiseItem>&, std::size_t, std::size_t,
                                          std::uint64_t);

}  // namespace jf::assemble
