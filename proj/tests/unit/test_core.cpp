#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "jf/core/config.hpp"
#include "jf/core/error.hpp"
#include "jf/core/prompt_template.hpp"
#include "jf/core/rng.hpp"
#include "jf/core/serialize.hpp"
#include "jf/core/taxonomy.hpp"

using namespace jf;

namespace {

BBox random_box(Rng& rng) {
  BBox b;
  b.x1 = 1 + static_cast<int>(rng.uniform_index(999));
  b.x2 = b.x1 + 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(1000 - b.x1)));
  b.y1 = 1 + static_cast<int>(rng.uniform_index(999));
  b.y2 = b.y1 + 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(1000 - b.y1)));
  b.ref_exp = "region \"" + std::to_string(rng.next() % 100) + "\"\né";
  return b;
}

std::string random_text(Rng& rng) {
  static const char* words[] = {"shadow", "edge", "<think>", "</answer>", "\"q\"", "\\", "\t", "café"};
  std::string s;
  const auto n = rng.uniform_index(6);
  for (std::uint64_t i = 0; i < n; ++i) s += std::string(words[rng.uniform_index(8)]) + " ";
  return s;
}

Sample random_sample(Rng& rng, int i) {
  Sample s;
  s.id = "s" + std::to_string(i);
  s.image_ref = "img/" + s.id + ".png";
  s.label = static_cast<Label>(rng.uniform_index(3));
  if (s.label == Label::edited) {
    for (std::uint64_t k = 0, n = 1 + rng.uniform_index(3); k < n; ++k) {
      s.edited_regions.push_back(random_box(rng));
    }
  }
  s.source = static_cast<Source>(rng.uniform_index(4));
  s.seed_tag = static_cast<std::int64_t>(rng.next());
  if (rng.coin()) s.extra["future_field"] = Json{{"nested", i}};
  return s;
}

ReasoningResponse random_response(Rng& rng, int rating, Origin origin) {
  ReasoningResponse r;
  r.text = random_text(rng);
  r.intended_rating = rating;
  r.origin = origin;
  r.variant_index = static_cast<int>(rng.uniform_index(5));
  r.iteration = static_cast<int>(rng.uniform_index(4));
  r.low_diversity = rng.coin();
  return r;
}

template <typename T>
void check_round_trip(const T& v) {
  const std::string line = serialize_record(v);
  CHECK(line.find('\n') == std::string::npos);
  const T back = parse_record<T>(line);
  CHECK(back == v);
  CHECK(serialize_record(back) == line);
}

}  // namespace

TEST_CASE("sample serializes to one line and parses back equal") {
  Sample s;
  s.id = "a";
  s.image_ref = "a.png";
  check_round_trip(s);
}

TEST_CASE("edited sample without regions is rejected") {
  Sample s;
  s.id = "a";
  s.label = Label::edited;
  try {
    (void)serialize_record(s);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "edited_regions");
    CHECK(std::string(e.what()).find("edited requires regions") != std::string::npos);
  }
}

TEST_CASE("real sample with regions is rejected") {
  Sample s;
  s.id = "a";
  s.edited_regions.push_back(BBox{});
  CHECK_THROWS_AS(validate(s), ValidationError);
}

TEST_CASE("bbox ordering and range") {
  BBox b{500, 10, 400, 20, "x"};
  try {
    validate(b);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("x1<x2 violated") != std::string::npos);
  }
  CHECK_THROWS_WITH_AS(validate(BBox{1, 30, 2, 20, ""}), doctest::Contains("y1<y2 violated"),
                       ValidationError);
  CHECK_THROWS_AS(validate(BBox{0, 1, 2, 3, ""}), ValidationError);
  CHECK_THROWS_AS(validate(BBox{1, 1, 1001, 3, ""}), ValidationError);
  CHECK_NOTHROW(validate(BBox{1, 1, 1000, 1000, ""}));
}

TEST_CASE("nested field path names the offending box") {
  Sample s;
  s.id = "a";
  s.label = Label::edited;
  s.edited_regions = {BBox{1, 1, 5, 5, ""}, BBox{9, 1, 5, 5, ""}};
  try {
    validate(s);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "edited_regions[1].x1");
  }
}

TEST_CASE("rating 5 needs gold or paraphrase origin") {
  ReasoningResponse r;
  r.intended_rating = 5;
  r.origin = Origin::generated;
  CHECK_THROWS_AS(validate(r), ValidationError);
  r.origin = Origin::paraphrase;
  CHECK_NOTHROW(validate(r));
  r.intended_rating = 6;
  CHECK_THROWS_AS(validate(r), ValidationError);
}

TEST_CASE("eval trace deviation is |r - r_hat|") {
  const EvalTrace t = make_trace(1, 4, "too strong", 0);
  CHECK(t.deviation == 3);
  EvalTrace bad = t;
  bad.deviation = 2;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  check_round_trip(t);
}

TEST_CASE("unknown fields are preserved and re-emitted") {
  const std::string line =
      R"({"id":"x","image_ref":"x.png","label":"real","edited_regions":[],"source":"t2i","seed_tag":-5,"zeta":1,"alpha":{"k":[1,2]}})";
  const auto s = parse_record<Sample>(line);
  CHECK(s.extra.size() == 2);
  CHECK(serialize_record(s) == line);
}

TEST_CASE("malformed and mistyped records are rejected") {
  CHECK_THROWS_AS(parse_record<Sample>("{not json"), ValidationError);
  CHECK_THROWS_AS(parse_record<Sample>(R"({"id":"x"})"), ValidationError);
  CHECK_THROWS_AS(
      parse_record<Sample>(
          R"({"id":"x","image_ref":"x","label":"maybe","edited_regions":[],"source":"t2i","seed_tag":1})"),
      ValidationError);
  CHECK_THROWS_AS(
      parse_record<Sample>(
          R"({"id":"x","image_ref":"x","label":"real","edited_regions":[],"source":"t2i","seed_tag":"1"})"),
      ValidationError);
}

TEST_CASE("round trip holds for generated instances of every type") {
  Rng rng(20240601);
  for (int i = 0; i < 300; ++i) {
    const Sample s = random_sample(rng, i);
    check_round_trip(s);

    HumanAnnotation a;
    a.sample_id = s.id;
    a.annotator_id = "ann" + std::to_string(i % 3);
    a.created_at = Timestamp{std::chrono::seconds{1600000000 + static_cast<std::int64_t>(rng.uniform_index(400000000))}};
    for (std::uint64_t k = 0, n = rng.uniform_index(3); k < n; ++k) {
      FlagEntry f;
      f.flag_name = "Shadows";
      f.bboxes.push_back(random_box(rng));
      a.flags.push_back(f);
    }
    check_round_trip(a);

    BootstrapRecord rec;
    rec.sample_id = s.id;
    rec.image_ref = s.image_ref;
    rec.label = s.label;
    if (rng.coin()) {
      rec.gold = random_response(rng, 5, Origin::gold);
      rec.gold->variant_index = 0;
      rec.gold->iteration = 0;
      rec.gold_variants.push_back(random_response(rng, 5, Origin::paraphrase));
    }
    for (int r = 1; r <= 4; ++r) {
      if (rng.coin()) rec.accepted[r] = {random_response(rng, r, Origin::refined)};
      rec.diagnostics.push_back(make_trace(r, 1 + static_cast<int>(rng.uniform_index(5)), random_text(rng), 0));
    }
    rec.notes.push_back(random_text(rng));
    rec.complete = rec.gold.has_value() && rec.accepted.size() == 4;
    check_round_trip(rec);
  }
}

TEST_CASE("timestamps are canonical UTC") {
  const Timestamp t{std::chrono::seconds{1700000000}};
  CHECK(format_timestamp(t) == "2023-11-14T22:13:20Z");
  CHECK(parse_timestamp("2023-11-14T22:13:20Z") == t);
  CHECK_THROWS(parse_timestamp("2023-11-14 22:13:20"));
  CHECK_THROWS(parse_timestamp("2023-02-30T00:00:00Z"));
}

TEST_CASE("complete record needs four levels and gold") {
  BootstrapRecord rec;
  rec.sample_id = "s";
  rec.complete = true;
  CHECK_THROWS_AS(validate(rec), ValidationError);
  rec.gold = ReasoningResponse{};
  rec.accepted[1] = {};
  CHECK_THROWS_AS(validate(rec), ValidationError);
  ReasoningResponse one;
  one.intended_rating = 1;
  one.origin = Origin::generated;
  rec.accepted[1] = {one};
  CHECK_NOTHROW(validate(rec));
  ReasoningResponse three = one;
  three.intended_rating = 3;
  rec.accepted[3] = {three};
  CHECK_THROWS_WITH_AS(validate(rec), doctest::Contains("gap at level 2"), ValidationError);
  rec.accepted.erase(3);
  ReasoningResponse wrong;
  wrong.intended_rating = 3;
  wrong.origin = Origin::generated;
  rec.accepted[2] = {wrong};
  CHECK_THROWS_AS(validate(rec), ValidationError);
}

TEST_CASE("rng is deterministic and bounded") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng c(11);
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 5000; ++i) hits[c.uniform_index(5)]++;
  for (int h : hits) CHECK(h > 800);
  CHECK(derive_seed(1, "x") != derive_seed(1, "y"));
  CHECK(derive_seed(1, "x") == derive_seed(1, "x"));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("toml config converts to json") {
  const Json j = parse_toml("a = 1\nb = [\"x\", 2.5]\n[t]\nflag = true\n[[arr]]\nname = \"n\"\n");
  CHECK(j["a"] == 1);
  CHECK(j["b"][1] == 2.5);
  CHECK(j["t"]["flag"] == true);
  CHECK(j["arr"][0]["name"] == "n");
  CHECK_THROWS_AS(parse_toml("a = = 1"), ConfigError);
}

TEST_CASE("shipped taxonomy has 15 distinct flags") {
  const auto tax = FlagTaxonomy::load(std::filesystem::path(JF_CONFIG_DIR) / "flag_taxonomy.toml");
  CHECK(tax.version() == 1);
  REQUIRE(tax.flags().size() == 15);
  CHECK(tax.flags().front().name == "Shadows");
  CHECK(tax.flags()[13].name == "Edges & Boundaries");
  std::set<std::string> names;
  for (const auto& f : tax.flags()) {
    names.insert(f.name);
    CHECK(!f.pass.empty());
    CHECK(!f.fail.empty());
  }
  CHECK(names.size() == 15);
  CHECK(tax.describe().find("15) Other") != std::string::npos);
  CHECK(FlagTaxonomy::from_json(tax.to_json()).flags().size() == 15);
}

TEST_CASE("annotation flags must exist in the taxonomy") {
  const auto tax = FlagTaxonomy::load(std::filesystem::path(JF_CONFIG_DIR) / "flag_taxonomy.toml");
  HumanAnnotation a;
  a.sample_id = "s";
  a.annotator_id = "u";
  a.flags.push_back(FlagEntry{"Shadows", {BBox{1, 1, 10, 10, "left shadow"}}, Json::object()});
  CHECK_NOTHROW(validate(a, tax));
  a.flags.push_back(FlagEntry{"Vibes", {}, Json::object()});
  CHECK_THROWS_AS(validate(a, tax), ValidationError);
}

TEST_CASE("taxonomy rejects duplicates and empty lists") {
  CHECK_THROWS_AS(FlagTaxonomy(1, {}), ConfigError);
  CHECK_THROWS_AS(FlagTaxonomy(1, {{"A", "", "", ""}, {"A", "", "", ""}}), ConfigError);
}

TEST_CASE("placeholders render and report missing values") {
  PromptTemplate t(TemplateName::pairwise_eval, "L=${label} {\"json\": $x} ${label} ${response_a}");
  CHECK(t.placeholders() == std::vector<std::string>{"label", "response_a"});
  CHECK(t.render({{"label", "fake"}, {"response_a", "${label}"}}) ==
        "L=fake {\"json\": $x} fake ${label}");
  try {
    (void)t.render({{"label", "fake"}});
    FAIL("expected missing placeholder");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "placeholder.response_a");
  }
}

TEST_CASE("every shipped prompt renders with a complete map") {
  const auto lib = PromptLibrary::load(JF_PROMPT_DIR);
  for (int i = 0; i <= static_cast<int>(TemplateName::reason); ++i) {
    const auto name = static_cast<TemplateName>(i);
    REQUIRE(lib.has(name));
    const auto& t = lib.get(name);
    PlaceholderMap values;
    for (const auto& p : t.placeholders()) values[p] = "<<" + p + ">>";
    const std::string out = t.render(values);
    CHECK(out.find("${") == std::string::npos);
  }
  CHECK(lib.get(TemplateName::pointwise_eval).placeholders() ==
        std::vector<std::string>{"label", "candidate_response"});
}
