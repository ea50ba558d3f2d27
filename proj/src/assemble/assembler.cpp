#include "jf/assemble/assembler.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "jf/core/error.hpp"
#include "jf/core/log.hpp"
#include "jf/core/rng.hpp"

namespace jf {
namespace {

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ValidationError(key, "wrong type");
  }
}

void check_rating(int r, const char* field_name) {
  if (r < kMinRating || r > kMaxRating) throw ValidationError(field_name, "rating outside 1..5");
}

}  // namespace

Json to_json(const PointwiseItem& v) {
  return Json{{"sample_id", v.sample_id},
              {"image_ref", v.image_ref},
              {"label", to_string(v.label)},
              {"response_text", v.response_text},
              {"target_rating", v.target_rating}};
}

Json to_json(const PairwiseItem& v) {
  return Json{{"sample_id", v.sample_id}, {"image_ref", v.image_ref},   {"label", to_string(v.label)},
              {"response_a", v.response_a}, {"response_b", v.response_b}, {"answer", to_string(v.answer)},
              {"rating_a", v.rating_a},     {"rating_b", v.rating_b},     {"swapped", v.swapped}};
}

template <>
PointwiseItem from_json<PointwiseItem>(const Json& j) {
  PointwiseItem v;
  v.sample_id = field<std::string>(j, "sample_id");
  v.image_ref = field<std::string>(j, "image_ref");
  v.label = parse_label(field<std::string>(j, "label"));
  v.response_text = field<std::string>(j, "response_text");
  v.target_rating = field<int>(j, "target_rating");
  return v;
}

template <>
PairwiseItem from_json<PairwiseItem>(const Json& j) {
  PairwiseItem v;
  v.sample_id = field<std::string>(j, "sample_id");
  v.image_ref = field<std::string>(j, "image_ref");
  v.label = parse_label(field<std::string>(j, "label"));
  v.response_a = field<std::string>(j, "response_a");
  v.response_b = field<std::string>(j, "response_b");
  v.answer = parse_choice(field<std::string>(j, "answer"));
  v.rating_a = field<int>(j, "rating_a");
  v.rating_b = field<int>(j, "rating_b");
  if (j.contains("swapped")) v.swapped = field<bool>(j, "swapped");
  return v;
}

void validate(const PointwiseItem& item) {
  if (item.sample_id.empty()) throw ValidationError("sample_id", "empty");
  check_rating(item.target_rating, "target_rating");
}

void validate(const PairwiseItem& item) {
  if (item.sample_id.empty()) throw ValidationError("sample_id", "empty");
  check_rating(item.rating_a, "rating_a");
  check_rating(item.rating_b, "rating_b");
  if (item.rating_a == item.rating_b) throw ValidationError("rating_b", "pair ratings must differ");
  if ((item.answer == Choice::A) != (item.rating_a > item.rating_b)) {
    throw ValidationError("answer", "answer must name the higher-rated response");
  }
}

}  // namespace jf

namespace jf::assemble {

std::vector<const ReasoningResponse*> responses_of(const BootstrapRecord& record) {
  std::vector<const ReasoningResponse*> out;
  if (record.gold) out.push_back(&*record.gold);
  for (const auto& v : record.gold_variants) out.push_back(&v);
  for (const auto& [r, list] : record.accepted) {
    for (const auto& v : list) out.push_back(&v);
  }
  return out;
}

namespace {

std::vector<const BootstrapRecord*> usable(const std::vector<BootstrapRecord>& records) {
  std::vector<const BootstrapRecord*> out;
  for (const auto& r : records) {
    if (!r.complete) {
      log_warning("assemble: skipping incomplete record " + r.sample_id);
      continue;
    }
    out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const BootstrapRecord* a, const BootstrapRecord* b) { return a->sample_id < b->sample_id; });
  return out;
}

}  // namespace

std::vector<PointwiseItem> build_pointwise(const std::vector<BootstrapRecord>& records) {
  std::vector<PointwiseItem> out;
  for (const auto* rec : usable(records)) {
    for (const auto* resp : responses_of(*rec)) {
      out.push_back({rec->sample_id, rec->image_ref, rec->label, resp->text, resp->intended_rating});
    }
  }
  return out;
}

std::vector<PairwiseItem> build_pairwise(const std::vector<BootstrapRecord>& records, int pairs_per_sample,
                                         std::uint64_t seed) {
  if (pairs_per_sample < 1) throw std::invalid_argument("pairs_per_sample must be >= 1");
  std::vector<PairwiseItem> out;
  for (const auto* rec : usable(records)) {
    const auto resp = responses_of(*rec);
    std::vector<std::pair<std::size_t, std::size_t>> eligible;
    for (std::size_t i = 0; i < resp.size(); ++i) {
      for (std::size_t j = i + 1; j < resp.size(); ++j) {
        if (resp[i]->intended_rating != resp[j]->intended_rating) eligible.emplace_back(i, j);
      }
    }
    std::size_t want = static_cast<std::size_t>(pairs_per_sample);
    if (want > eligible.size()) {
      log_warning("assemble: " + rec->sample_id + " has " + std::to_string(eligible.size()) +
                  " cross-level pairs; capped from " + std::to_string(want));
      want = eligible.size();
    }
    Rng rng(derive_seed(seed, rec->sample_id));
    // Partial Fisher-Yates: the first `want` slots are a uniform draw without replacement.
    for (std::size_t i = 0; i < want; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_index(eligible.size() - i));
      std::swap(eligible[i], eligible[j]);
    }
    std::sort(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(want));
    for (std::size_t p = 0; p < want; ++p) {
      const auto* x = resp[eligible[p].first];
      const auto* y = resp[eligible[p].second];
      const auto* hi = x->intended_rating > y->intended_rating ? x : y;
      const auto* lo = hi == x ? y : x;
      PairwiseItem item;
      item.sample_id = rec->sample_id;
      item.image_ref = rec->image_ref;
      item.label = rec->label;
      item.swapped = rng.coin();
      const auto* a = item.swapped ? lo : hi;
      const auto* b = item.swapped ? hi : lo;
      item.response_a = a->text;
      item.response_b = b->text;
      item.rating_a = a->intended_rating;
      item.rating_b = b->intended_rating;
      item.answer = item.swapped ? Choice::B : Choice::A;
      out.push_back(std::move(item));
    }
  }
  return out;
}

template <typename Item>
Split<Item> split(const std::vector<Item>& dataset, std::size_t train_count, std::size_t test_count,
                  std::uint64_t seed) {
  if (train_count + test_count > dataset.size()) {
    throw std::invalid_argument("split: train_count + test_count exceeds the dataset");
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.size(); ++i) groups[dataset[i].sample_id].push_back(i);
  std::vector<std::string> order;
  for (const auto& [id, idx] : groups) order.push_back(id);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(std::span<std::string>(order));

  std::vector<char> taken(order.size(), 0);
  auto fill = [&](std::size_t target) {
    std::vector<std::size_t> chosen;
    std::size_t size = 0;
    for (std::size_t g = 0; g < order.size() && size < target; ++g) {
      const std::size_t n = groups[order[g]].size();
      if (taken[g] || size + n > target) continue;
      taken[g] = 1;
      chosen.push_back(g);
      size += n;
    }
    if (size < target) {
      // Smallest overshoot, taken only when it lands nearer the target.
      std::size_t best = order.size();
      for (std::size_t g = 0; g < order.size(); ++g) {
        if (taken[g]) continue;
        if (best == order.size() || groups[order[g]].size() < groups[order[best]].size()) best = g;
      }
      if (best < order.size() && size + groups[order[best]].size() - target < target - size) {
        taken[best] = 1;
        chosen.push_back(best);
        size += groups[order[best]].size();
      }
    }
    return std::make_pair(chosen, size);
  };

  Split<Item> out;
  auto emit = [&](const std::vector<std::size_t>& chosen, std::vector<Item>& side) {
    std::vector<std::size_t> idx;
    for (std::size_t g : chosen) {
      for (std::size_t i : groups[order[g]]) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) side.push_back(dataset[i]);
  };
  const auto [test_groups, test_size] = fill(test_count);
  const auto [train_groups, train_size] = fill(train_count);
  emit(test_groups, out.test);
  emit(train_groups, out.train);
  if (test_size != test_count || train_size != train_count) {
    out.note = "sample-level split gives train " + std::to_string(train_size) + " / test " +
               std::to_string(test_size) + " (requested " + std::to_string(train_count) + " / " +
               std::to_string(test_count) + ")";
    log_warning("assemble: " + out.note);
  }
  std::set<std::string> train_ids;
  for (const auto& it : out.train) train_ids.insert(it.sample_id);
  for (const auto& it : out.test) {
    if (train_ids.count(it.sample_id)) throw Error("split leaked sample " + it.sample_id);
  }
  return out;
}

template Split<PointwiseItem> split(const std::vector<PointwiseItem>&, std::size_t, std::size_t, std::uint64_t);
template Split<PairwiseItem> split(const std::vector<PairwiseItem>&, std::size_t, std::size_t, std::uint64_t);

}  // namespace jf::assemble
