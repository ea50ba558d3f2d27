#include "jf/select/set_cover.hpp"

#include <algorithm>
#include <unordered_map>

#include "jf/core/error.hpp"
#include "jf/core/rng.hpp"

namespace jf::select {
namespace {

struct Interned {
  std::vector<std::vector<std::size_t>> sets;
  std::size_t universe = 0;
};

Interned intern(std::span<const LabeledImage> pool) {
  std::unordered_map<std::string, std::size_t> ids;
  Interned out;
  out.sets.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].label_set.empty()) {
      throw ValidationError("pool[" + std::to_string(i) + "].label_set", "empty label set");
    }
    std::vector<std::size_t> ids_here;
    for (const auto& label : pool[i].label_set) {
      auto [it, inserted] = ids.try_emplace(label, ids.size());
      ids_here.push_back(it->second);
    }
    std::sort(ids_here.begin(), ids_here.end());
    ids_here.erase(std::unique(ids_here.begin(), ids_here.end()), ids_here.end());
    out.sets.push_back(std::move(ids_here));
  }
  out.universe = ids.size();
  return out;
}

}  // namespace

Json to_json(const LabeledImage& v) {
  Json j = Json::object();
  j["image_id"] = v.image_id;
  j["label_set"] = v.label_set;
  j["verified"] = v.verified;
  for (const auto& [k, val] : v.extra.items()) j[k] = val;
  return j;
}

LabeledImage labeled_image_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("", "labeled image must be an object");
  LabeledImage v;
  for (const auto& [key, val] : j.items()) {
    try {
      if (key == "image_id") {
        v.image_id = val.get<std::string>();
      } else if (key == "label_set") {
        v.label_set = val.get<std::vector<std::string>>();
      } else if (key == "verified") {
        v.verified = val.get<bool>();
      } else {
        v.extra[key] = val;
      }
    } catch (const Json::exception&) {
      throw ValidationError(key, "wrong type");
    }
  }
  if (v.image_id.empty()) throw ValidationError("image_id", "missing image_id");
  return v;
}

std::vector<std::size_t> CoverSelection::indices() const {
  std::vector<std::size_t> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.index);
  return out;
}

CoverSelection greedy_set_cover(std::span<const LabeledImage> pool, std::size_t k,
                                std::uint64_t seed, std::size_t window) {
  if (pool.empty()) throw Error("set cover: empty pool");
  if (k > pool.size()) throw Error("set cover: k exceeds pool size");
  if (window == 0) throw Error("set cover: window must be >= 1");

  const Interned data = intern(pool);
  std::vector<char> covered(data.universe, 0);
  std::vector<char> taken(pool.size(), 0);
  Rng rng(seed);

  CoverSelection out;
  out.total_labels = data.universe;
  std::vector<std::pair<std::size_t, std::size_t>> ranked;  // (gain, index)
  for (std::size_t step = 0; step < k; ++step) {
    ranked.clear();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      std::size_t gain = 0;
      for (std::size_t id : data.sets[i]) gain += covered[id] ? 0 : 1;
      ranked.emplace_back(gain, i);
    }
    const std::size_t c = std::min(window, ranked.size());
    auto better = [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    };
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(c),
                      ranked.end(), better);
    const auto pick = ranked[c == 1 ? 0 : rng.uniform_index(c)];
    taken[pick.second] = 1;
    for (std::size_t id : data.sets[pick.second]) {
      if (!covered[id]) {
        covered[id] = 1;
        ++out.covered_labels;
      }
    }
    out.steps.push_back({pick.second, pick.first});
  }
  return out;
}

ReservedSelection select_with_reserve(std::span<const LabeledImage> pool, std::size_t k,
                                      std::size_t reserve, std::uint64_t seed,
                                      std::size_t window) {
  if (k + reserve > pool.size()) throw Error("set cover: k + reserve exceeds pool size");
  ReservedSelection out;
  out.selection = greedy_set_cover(pool, k, seed, window);
  std::vector<char> taken(pool.size(), 0);
  for (const auto& s : out.selection.steps) taken[s.index] = 1;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!taken[i]) rest.push_back(i);
  }
  Rng rng(derive_seed(seed, "reserve"));
  rng.shuffle(std::span<std::size_t>(rest));
  rest.resize(reserve);
  std::sort(rest.begin(), rest.end());
  out.reserved = std::move(rest);
  return out;
}

std::size_t coverage(std::span<const LabeledImage> pool, std::span<const std::size_t> chosen) {
  std::vector<std::string> labels;
  for (std::size_t i : chosen) {
    const auto& set = pool[i].label_set;
    labels.insert(labels.end(), set.begin(), set.end());
  }
  std::sort(labels.begin(), labels.end());
  return static_cast<std::size_t>(std::unique(labels.begin(), labels.end()) - labels.begin());
}

}  // namespace jf::select
