#include <doctest.h>

#include <filesystem>
#include <set>

#include "jf/core/error.hpp"
#include "jf/core/rng.hpp"
#include "jf/select/manifest.hpp"
#include "jf/select/prompt_filter.hpp"
#include "jf/select/set_cover.hpp"
#include "oracles.hpp"

using namespace jf;
using namespace jf::select;

namespace {

KeywordConfig shipped() {
  static const KeywordConfig cfg =
      KeywordConfig::load(std::filesystem::path(JF_CONFIG_DIR) / "prompt_keywords.toml");
  return cfg;
}

std::string words(int n, const std::string& w = "plain") {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + w + std::to_string(i);
  return s;
}

PromptCandidate cand(const std::string& cat, double score, const std::string& text) {
  PromptCandidate c;
  c.text = text;
  c.category = cat;
  c.score = score;
  return c;
}

}  // namespace

TEST_CASE("greedy set cover toy example") {
  const std::vector<LabeledImage> pool{{"I1", {"a", "b"}, true, Json::object()},
                                       {"I2", {"c"}, true, Json::object()},
                                       {"I3", {"c", "d"}, true, Json::object()}};
  const auto sel = greedy_set_cover(pool, 2, 1, 1);
  CHECK(sel.indices() == std::vector<std::size_t>{0, 2});
  CHECK(sel.covered_labels == 4);
  std::vector<std::set<int>> sets{{0, 1}, {2}, {2, 3}};
  CHECK(oracle::max_coverage(sets, 2) == 4);
}

TEST_CASE("set cover edge cases") {
  const std::vector<LabeledImage> pool{{"a", {"x"}, true, Json::object()},
                                       {"b", {"y"}, false, Json::object()},
                                       {"c", {"x", "z"}, true, Json::object()}};
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    auto idx = greedy_set_cover(pool, 3, seed).indices();
    std::sort(idx.begin(), idx.end());
    CHECK(idx == std::vector<std::size_t>{0, 1, 2});
  }
  CHECK(greedy_set_cover(pool, 2, 42).indices() == greedy_set_cover(pool, 2, 42).indices());
  CHECK_THROWS_AS(greedy_set_cover(std::vector<LabeledImage>{}, 0, 1), Error);
  CHECK_THROWS_AS(greedy_set_cover(pool, 4, 1), Error);
  const std::vector<LabeledImage> bad{{"a", {}, true, Json::object()}};
  CHECK_THROWS_AS(greedy_set_cover(bad, 1, 1), ValidationError);
}

TEST_CASE("stochastic window draws among the top candidates") {
  std::vector<LabeledImage> pool;
  for (int i = 0; i < 6; ++i) pool.push_back({"i" + std::to_string(i), {"l" + std::to_string(i)}, true, Json::object()});
  std::set<std::size_t> firsts;
  for (std::uint64_t seed = 0; seed < 60; ++seed) firsts.insert(greedy_set_cover(pool, 1, seed, 3).indices()[0]);
  CHECK(firsts == std::set<std::size_t>{0, 1, 2});
}

TEST_CASE("greedy coverage meets the 1-1/e bound on small random instances") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(9);
    std::vector<LabeledImage> pool;
    std::vector<std::set<int>> sets;
    for (std::size_t i = 0; i < n; ++i) {
      std::set<int> s;
      for (auto m = 1 + rng.uniform_index(5); m > 0; --m) s.insert(static_cast<int>(rng.uniform_index(15)));
      LabeledImage img{"i" + std::to_string(i), {}, true, Json::object()};
      for (int v : s) img.label_set.push_back("L" + std::to_string(v));
      pool.push_back(img);
      sets.push_back(s);
    }
    const std::size_t k = 1 + rng.uniform_index(n);
    const auto sel = greedy_set_cover(pool, k, trial, 1);
    const auto opt = oracle::max_coverage(sets, k);
    CHECK(static_cast<double>(sel.covered_labels) >= (1.0 - std::exp(-1.0)) * static_cast<double>(opt));
    const auto idx = sel.indices();
    CHECK(coverage(pool, idx) == sel.covered_labels);
  }
}

TEST_CASE("adding a label never lowers a marginal gain") {
  std::vector<LabeledImage> pool{{"a", {"x", "y"}, true, Json::object()},
                                 {"b", {"y"}, true, Json::object()}};
  const auto before = greedy_set_cover(pool, 2, 1, 1);
  pool[1].label_set.push_back("w");
  const auto after = greedy_set_cover(pool, 2, 1, 1);
  CHECK(after.steps[1].gain >= before.steps[1].gain);
}

TEST_CASE("reserve set is disjoint from the selection") {
  std::vector<LabeledImage> pool;
  for (int i = 0; i < 30; ++i) pool.push_back({"i" + std::to_string(i), {"l" + std::to_string(i % 7)}, true, Json::object()});
  const auto r = select_with_reserve(pool, 10, 8, 5);
  const auto idx = r.selection.indices();
  std::set<std::size_t> chosen(idx.begin(), idx.end());
  CHECK(r.reserved.size() == 8);
  for (auto i : r.reserved) CHECK(chosen.count(i) == 0);
  CHECK_THROWS(select_with_reserve(pool, 25, 6, 1));
}

TEST_CASE("labeled image json round trip keeps extras") {
  LabeledImage img{"x", {"a", "b"}, true, Json{{"boxes", 3}}};
  CHECK(labeled_image_from_json(to_json(img)) == img);
}

TEST_CASE("shipped keyword config matches the table") {
  const auto cfg = shipped();
  CHECK(cfg.positive.size() == 18);
  CHECK(cfg.positive.front().name == "people-portrait");
  REQUIRE(cfg.negative.size() == 2);
  CHECK(cfg.negative[0].name == "unreal");
  CHECK(cfg.negative[1].name == "nsfw");
}

TEST_CASE("score_prompt formula") {
  const auto cfg = shipped();
  const std::string text = words(54) + " portrait";
  const auto c = score_prompt(text, cfg);
  CHECK(c.word_count == 55);
  CHECK(c.category == "people-portrait");
  const double expected = 0.6 / (1 + std::exp(-(55 - 65) / 12.0)) + 0.5;
  CHECK(c.score == doctest::Approx(expected));

  const auto single = score_prompt("hello", cfg);
  CHECK(single.clause_count == 0);
  CHECK(single.score < 0.5);
  CHECK(score_prompt(text, cfg) == c);
  CHECK_THROWS(score_prompt("", cfg));
}

TEST_CASE("clauses and penalties") {
  const auto cfg = shipped();
  CHECK(count_clauses("a man, a dog; sun and sea with hats") == 4);
  CHECK(count_clauses("sand, sandwich") == 1);
  const auto a = score_prompt("x, y, z, w, v, u", cfg);
  CHECK(a.clause_count == 5);
  const auto rep = score_prompt("photo: red old car red old car red old car", cfg);
  const auto norep = score_prompt("photo: red old car blue new bus tall big ship", cfg);
  CHECK(rep.score == doctest::Approx(norep.score - 0.2));
  const auto lng = score_prompt(words(151), cfg);
  const double l = 0.6 / (1 + std::exp(-(151 - 65) / 12.0));
  CHECK(lng.score == doctest::Approx(l - 0.2));
}

TEST_CASE("keyword matching respects word boundaries") {
  CHECK(contains_keyword("A Close-Up shot", "close-up"));
  CHECK_FALSE(contains_keyword("a catalog", "cat"));
  CHECK_FALSE(contains_keyword("cat's toy", "cat"));
  CHECK(contains_keyword("my cat.", "cat"));
  CHECK(contains_keyword("from a bird's-eye view", "bird's-eye view"));
  CHECK(contains_keyword("nsfl content", "NSFL"));
}

TEST_CASE("first matching class in table order names the category") {
  const auto cfg = shipped();
  CHECK(score_prompt("a dog on a beach", cfg).category == "nature-landscape");
  CHECK(score_prompt("a dog in a kitchen", cfg).category == "animals-pets");
  CHECK(score_prompt("nothing matches here", cfg).category == "people-portrait");
}

TEST_CASE("filter_prompts rejects negative classes") {
  const auto cfg = shipped();
  const std::vector<std::string> corpus{"a dragon over a city", "nsfw photo of a beach",
                                         "a candid photo of a farmer at dawn", "一个美丽的山谷风景照片",
                                         "  ", "a robot and blood"};
  const auto r = filter_prompts(corpus, cfg);
  REQUIRE(r.accepted.size() == 1);
  CHECK(r.accepted[0].text == corpus[2]);
  REQUIRE(r.rejected.size() == 5);
  CHECK(r.rejected[0].rejected_reason == "unreal");
  CHECK(r.rejected[1].rejected_reason == "nsfw");
  CHECK(r.rejected[2].rejected_reason == "non_english");
  CHECK(r.rejected[3].rejected_reason == "empty");
  CHECK(r.rejected[4].rejected_reason == "unreal");
  for (const auto& c : r.accepted) CHECK_FALSE(c.rejected_reason);
}

TEST_CASE("balanced selection reproduces a dominant class plus tail") {
  std::vector<PromptCandidate> pool;
  const std::vector<std::pair<std::string, int>> sizes{
      {"people-portrait", 5000}, {"nature-landscape", 77}, {"transportation", 72},
      {"animals-pets", 58}, {"events", 15}, {"people-activity", 14}, {"weather", 12},
      {"macro-detail", 11}, {"aerial-drone", 10}, {"underwater", 10}, {"sports-action", 9},
      {"food-product", 8}, {"night-lowlight", 7}};
  for (const auto& [cat, n] : sizes) {
    for (int i = 0; i < n; ++i) pool.push_back(cand(cat, 1.0 + (i % 5) * 0.01, cat + std::to_string(i)));
  }
  const auto sel = balanced_select(pool, 2000, 11);
  CHECK(sel.selected.size() == 2000);
  CHECK(sel.counts.at("people-portrait") == 1697);
  CHECK(sel.counts.at("nature-landscape") == 77);
  CHECK(sel.counts.at("events") == 15);
  CHECK(sel.counts.size() == 13);
  CHECK(sel.log.size() == 12);
  const auto again = balanced_select(pool, 2000, 11);
  CHECK(again.selected == sel.selected);
  CHECK_THROWS(balanced_select(pool, pool.size() + 1, 1));
}

TEST_CASE("balanced selection backfill on a toy pool") {
  // Sizes 1, 4, 10 with total 9: shares 3 -> small gives 1 (short 2),
  // then 8 over two categories -> 4 and 4.
  std::vector<PromptCandidate> pool;
  pool.push_back(cand("s", 1, "s0"));
  for (int i = 0; i < 4; ++i) pool.push_back(cand("m", 1, "m" + std::to_string(i)));
  for (int i = 0; i < 10; ++i) pool.push_back(cand("l", i, "l" + std::to_string(i)));
  const auto sel = balanced_select(pool, 9, 3);
  CHECK(sel.counts.at("s") == 1);
  CHECK(sel.counts.at("m") == 4);
  CHECK(sel.counts.at("l") == 4);
  REQUIRE(sel.log.size() == 1);
  CHECK(sel.log[0].find("short by 2") != std::string::npos);
  std::vector<std::string> top;
  for (const auto& c : sel.selected) if (c.category == "l") top.push_back(c.text);
  CHECK(top == std::vector<std::string>{"l9", "l8", "l7", "l6"});
}

TEST_CASE("single category selection") {
  std::vector<PromptCandidate> pool;
  for (int i = 0; i < 5; ++i) pool.push_back(cand("only", 1, std::to_string(i)));
  const auto sel = balanced_select(pool, 3, 1);
  CHECK(sel.counts.at("only") == 3);
  CHECK(sel.log.empty());
}

TEST_CASE("manifest lines and round trip") {
  const std::vector<PromptCandidate> sel{cand("a", 1.1, "p one"), cand("b", 0.9, "p two")};
  const auto m = build_manifest(sel, "t2i-A", 77);
  REQUIRE(m.size() == 2);
  CHECK(m[0].model_tag == "t2i-A");
  CHECK(m[0].seed != m[1].seed);
  const auto path = std::filesystem::temp_directory_path() / "jf_manifest_test.jsonl";
  write_manifest(path, m);
  CHECK(read_manifest(path) == m);
  CHECK(build_manifest(std::vector<PromptCandidate>{}, "t", 1).empty());
  std::filesystem::remove(path);
}
