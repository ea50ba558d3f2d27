#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>

#include "jf/core/error.hpp"
#include "jf/eval/agreement.hpp"
#include "jf/eval/harness.hpp"
#include "jf/eval/report.hpp"
#include "jf/gateway/mock.hpp"
#include "jf/metrics/statistics.hpp"

using namespace jf;
using namespace jf::eval;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("jf_eval_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int marked_rating(const std::string& text) {
  static const std::regex re("quality=(\\d)");
  std::smatch m;
  return std::regex_search(text, m, re) ? std::stoi(m[1]) : 0;
}

std::vector<PointwiseItem> pointwise_items(int samples) {
  std::vector<PointwiseItem> out;
  for (int s = 0; s < samples; ++s) {
    for (int r = 1; r <= 5; ++r) {
      out.push_back({"s" + std::to_string(s), "img/s" + std::to_string(s) + ".png", Label::fake,
                     "<think>evidence quality=" + std::to_string(r) + "</think>\n<answer>Fake</answer>", r});
    }
  }
  return out;
}

std::vector<PairwiseItem> pairwise_items(int n) {
  std::vector<PairwiseItem> out;
  for (int i = 0; i < n; ++i) {
    PairwiseItem it;
    it.sample_id = "s" + std::to_string(i / 10);
    it.image_ref = "img.png";
    it.label = Label::fake;
    const int hi = 5 - i % 3, lo = 1 + i % 2;
    it.swapped = i % 2 == 1;
    it.rating_a = it.swapped ? lo : hi;
    it.rating_b = it.swapped ? hi : lo;
    it.response_a = "quality=" + std::to_string(it.rating_a) + " first";
    it.response_b = "quality=" + std::to_string(it.rating_b) + " second";
    it.answer = it.swapped ? Choice::B : Choice::A;
    out.push_back(it);
  }
  return out;
}

RunSpec spec_for(const fs::path& dir, Protocol p, const std::string& model = "judge-x") {
  RunSpec s;
  s.dataset_ref = (dir / "data.jsonl").string();
  s.model_tag = model;
  s.protocol = p;
  s.out_dir = (dir / "out").string();
  s.workers = 3;
  return s;
}

struct Env {
  PromptLibrary prompts = PromptLibrary::load(JF_PROMPT_DIR);
  std::shared_ptr<gateway::Backend> backend;
  gateway::Gateway gw;

  explicit Env(gateway::FunctionBackend::ChatFn fn)
      : backend(std::make_shared<gateway::FunctionBackend>(std::move(fn))), gw(backend, quick()) {}

  static gateway::BackendConfig quick() {
    gateway::BackendConfig c;
    c.retry.max_attempts = 2;
    c.retry.backoff_base_ms = 0;
    return c;
  }
};

// Pointwise: rating from the candidate's marker, shifted. Pairwise: higher marker wins.
gateway::FunctionBackend::ChatFn judge(int shift = 0) {
  return [shift](const gateway::ChatRequest& req) -> std::string {
    const auto prompt = gateway::prompt_text(req);
    if (req.purpose == "pointwise_eval") {
      const auto pos = prompt.rfind("Candidate response");
      return "<reasoning>ok</reasoning><score>" + std::to_string(marked_rating(prompt.substr(pos)) + shift) +
             "</score>";
    }
    const auto a = prompt.rfind("Response A:"), b = prompt.rfind("Response B:");
    return marked_rating(prompt.substr(a, b - a)) > marked_rating(prompt.substr(b)) ? "<answer>A</answer>"
                                                                                     : "<answer>B</answer>";
  };
}

const metrics::MetricValue& get(const MetricReport& r, const std::string& name) {
  for (const auto& m : r.rows.at(0).metrics) {
    if (m.name == name) return m;
  }
  FAIL("missing metric " << name);
  throw 0;
}

void check_accounting(const MetricReport& r) {
  for (const auto& row : r.rows) {
    for (const auto& m : row.metrics) CHECK(m.support + m.skipped == row.items);
  }
}

}  // namespace

TEST_CASE("run spec parsing") {
  const auto s = RunSpec::from_json(Json::parse(
      R"({"run": {"dataset_ref": "d/pw.jsonl", "model_tag": "m", "protocol": "pairwise", "out_dir": "o",
          "max_items": 10, "seed": 3}})"));
  CHECK(s.protocol == Protocol::pairwise);
  CHECK(s.name() == "pw");
  CHECK(s.max_items == 10);
  CHECK(s.hash() == RunSpec(s).hash());
  auto t = s;
  t.seed = 4;
  CHECK(t.hash() != s.hash());
  CHECK_THROWS_AS(RunSpec::from_json(Json::parse(R"({"dataset_ref": "x", "model_tag": "m", "out_dir": "o"})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_protocol("ranking"), ConfigError);
  CHECK_THROWS_AS(RunSpec::from_json(Json::parse(R"({"protocol": "detect", "model_tag": "m", "out_dir": "o"})")),
                  ConfigError);
}

TEST_CASE("pointwise: perfect, constant and shifted judges") {
  TempDir dir("pointwise");
  const auto items = pointwise_items(20);
  {
    Env env(judge());
    Harness h(env.gw, env.prompts, spec_for(dir.path / "a", Protocol::pointwise));
    const auto r = h.run_pointwise(items);
    CHECK(*get(r, "rmse").value == 0.0);
    CHECK(*get(r, "mse").value == 0.0);
    CHECK(*get(r, "pearson").value == doctest::Approx(1.0));
    CHECK(*get(r, "spearman").value == doctest::Approx(1.0));
    CHECK(get(r, "rmse").support == 100);
    check_accounting(r);
  }
  {
    Env env([](const gateway::ChatRequest&) { return std::string("<score>3</score>"); });
    Harness h(env.gw, env.prompts, spec_for(dir.path / "b", Protocol::pointwise));
    const auto r = h.run_pointwise(items);
    CHECK_FALSE(get(r, "pearson").value);
    CHECK_FALSE(get(r, "spearman").value);
    CHECK(get(r, "pearson").support == 100);
    CHECK(*get(r, "mse").value == doctest::Approx(2.0));
  }
  {
    std::vector<PointwiseItem> low;
    for (const auto& it : items) {
      if (it.target_rating <= 4) low.push_back(it);
    }
    Env env(judge(1));
    Harness h(env.gw, env.prompts, spec_for(dir.path / "c", Protocol::pointwise));
    const auto r = h.run_pointwise(low);
    CHECK(*get(r, "rmse").value == 1.0);
    CHECK(*get(r, "mse").value == 1.0);
  }
}

TEST_CASE("pointwise: unparseable replies and failures are counted") {
  TempDir dir("pointwise_skip");
  int calls = 0;
  std::mutex m;
  Env env([&](const gateway::ChatRequest& req) -> std::string {
    std::lock_guard lock(m);
    ++calls;
    const auto prompt = gateway::prompt_text(req);
    const int r = marked_rating(prompt.substr(prompt.rfind("Candidate response")));
    if (r == 5) return "no score here";
    if (r == 4) throw TransportError("HTTP 400", false, 400);
    return "<score>" + std::to_string(r) + "</score>";
  });
  Harness h(env.gw, env.prompts, spec_for(dir.path, Protocol::pointwise));
  const auto r = h.run_pointwise(pointwise_items(4));
  CHECK(get(r, "rmse").support == 12);
  CHECK(get(r, "rmse").skipped == 8);
  CHECK(h.failures() == 4);
  check_accounting(r);
}

TEST_CASE("pairwise: perfect, position-biased and 962 of 1000") {
  TempDir dir("pairwise");
  const auto items = pairwise_items(1000);
  {
    Env env(judge());
    Harness h(env.gw, env.prompts, spec_for(dir.path / "a", Protocol::pairwise));
    const auto r = h.run_pairwise(items);
    CHECK(*get(r, "accuracy").value == 1.0);
    check_accounting(r);
  }
  {
    Env env([](const gateway::ChatRequest&) { return std::string("<answer>A</answer>"); });
    Harness h(env.gw, env.prompts, spec_for(dir.path / "b", Protocol::pairwise));
    const auto r = h.run_pairwise(items);
    const auto [lo, hi] = metrics::binomial_central_interval(1000, 0.5, 0.01);
    const double acc = *get(r, "accuracy").value;
    CHECK(acc * 1000 >= lo);
    CHECK(acc * 1000 <= hi);
    CHECK(*get(r, "chose_a").value == 1.0);
  }
  {
    Env env(judge());
    // The perfect judge disagrees with a flipped answer key on the last 38 items.
    auto flipped = items;
    for (std::size_t i = 962; i < 1000; ++i) {
      flipped[i].answer = flipped[i].answer == Choice::A ? Choice::B : Choice::A;
    }
    Harness h(env.gw, env.prompts, spec_for(dir.path / "c", Protocol::pairwise));
    const auto r = h.run_pairwise(flipped);
    CHECK(*get(r, "accuracy").value == doctest::Approx(0.962).epsilon(1e-12));
    CHECK(format_value(get(r, "accuracy").value) == "0.9620");
  }
}

TEST_CASE("detect: perfect, all-real and a toy confusion table") {
  TempDir dir("detect");
  std::vector<Sample> samples;
  for (int i = 0; i < 12; ++i) {
    Sample s;
    s.id = "d" + std::to_string(i);
    s.label = i < 6 ? Label::real : i < 9 ? Label::fake : Label::edited;
    if (s.label == Label::edited) s.edited_regions.push_back({1, 1, 10, 10, "x"});
    s.image_ref = "img/" + std::string(to_string(s.label)) + "/" + s.id + ".png";
    samples.push_back(s);
  }
  auto truth_of = [](const gateway::ChatRequest& req) {
    const auto img = req.messages.at(0).image_ref.value();
    return img.substr(4, img.find('/', 4) - 4);
  };
  {
    Env env([&](const gateway::ChatRequest& req) { return "<answer>" + truth_of(req) + "</answer>"; });
    Harness h(env.gw, env.prompts, spec_for(dir.path / "a", Protocol::detect));
    const auto r = h.run_detect(samples);
    for (const char* n : {"real_acc", "real_f1", "fake_acc", "fake_f1", "overall_acc", "overall_f1"}) {
      CHECK(*get(r, n).value == 1.0);
    }
    CHECK(r.extra.at("judge-x/data").at("confusion").at("edited").at("edited") == 3);
  }
  {
    Env env([](const gateway::ChatRequest&) { return std::string("<answer>real</answer>"); });
    Harness h(env.gw, env.prompts, spec_for(dir.path / "b", Protocol::detect));
    const auto r = h.run_detect(samples);
    CHECK(*get(r, "real_acc").value == 1.0);
    CHECK(*get(r, "fake_acc").value == 0.0);
  }
  {
    // real: 4 right, 1 fake, 1 unparseable. fake: 2 right, 1 real. edited: 2 edited, 1 real.
    const std::map<std::string, std::string> pred{{"d0", "real"}, {"d1", "real"}, {"d2", "real"}, {"d3", "real"},
                                                  {"d4", "fake"}, {"d5", "???"},  {"d6", "fake"}, {"d7", "fake"},
                                                  {"d8", "real"}, {"d9", "edited"}, {"d10", "edited"}, {"d11", "real"}};
    Env env([&](const gateway::ChatRequest& req) {
      const auto img = req.messages.at(0).image_ref.value();
      const auto id = img.substr(img.rfind('/') + 1, img.size() - img.rfind('/') - 5);
      return "<answer>" + pred.at(id) + "</answer>";
    });
    Harness h(env.gw, env.prompts, spec_for(dir.path / "c", Protocol::detect));
    const auto r = h.run_detect(samples);
    // Two-class: real row 4 real / 1 fake / 1 unparsed; fake row 2 real / 4 fake.
    const double real_acc = 4.0 / 6, real_prec = 4.0 / 6, fake_acc = 4.0 / 6, fake_prec = 4.0 / 5;
    CHECK(*get(r, "real_acc").value == doctest::Approx(real_acc));
    CHECK(*get(r, "real_f1").value == doctest::Approx(2 * real_prec * real_acc / (real_prec + real_acc)));
    CHECK(*get(r, "fake_f1").value == doctest::Approx(2 * fake_prec * fake_acc / (fake_prec + fake_acc)));
    CHECK(*get(r, "overall_acc").value == doctest::Approx(8.0 / 12));
    CHECK(get(r, "real_acc").skipped == 1);
    check_accounting(r);
  }
}

TEST_CASE("reason: verbatim gold, judge columns") {
  TempDir dir("reason");
  std::vector<ReasonItem> items;
  for (int i = 0; i < 6; ++i) {
    items.push_back({"r" + std::to_string(i), "img/r" + std::to_string(i) + ".png", Label::fake,
                     "<think>the shadow under item " + std::to_string(i) +
                         " points the wrong way and the edge glows</think>\n<answer>Fake</answer>"});
  }
  std::map<std::string, std::string> gold;
  for (const auto& it : items) gold[it.image_ref] = it.reference;
  Env env([&](const gateway::ChatRequest& req) { return gold.at(req.messages.at(0).image_ref.value()); });
  int judged = 0;
  Env judge_env([&](const gateway::ChatRequest& req) {
    CHECK(req.temperature == 0.0);
    return std::string(judged++ % 2 ? "<score>4</score>" : "<score>3</score>");
  });
  auto spec = spec_for(dir.path, Protocol::reason);
  spec.judge_model = "dfj";
  spec.embed_model = "emb";
  spec.workers = 1;
  spec.temperature = 0.7;
  Harness h(env.gw, env.prompts, spec);
  const auto r = h.run_reason(items, &judge_env.gw);
  for (const char* n : {"bleu1", "bleu2", "bleu3", "rouge1", "rouge2", "rougeL", "embed"}) {
    CAPTURE(n);
    CHECK(*get(r, n).value == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Identity alignment has one chunk: 1 - 0.5 / m^3 with m = 13 tokens.
  CHECK(*get(r, "meteor").value == doctest::Approx(1.0 - 0.5 / (13.0 * 13 * 13)).epsilon(1e-12));
  CHECK(*get(r, "dfj").value == doctest::Approx(3.5));
  check_accounting(r);

  TempDir dir2("reason5");
  Env five([](const gateway::ChatRequest&) { return std::string("<score>5</score>"); });
  auto spec2 = spec;
  spec2.out_dir = (dir2.path / "out").string();
  Harness h2(env.gw, env.prompts, spec2);
  CHECK(*get(h2.run_reason(items, &five.gw), "dfj").value == 5.0);
  Harness h3(env.gw, env.prompts, spec2);
  const auto no_judge = h3.run_reason(items, nullptr);
  CHECK(no_judge.find("judge-x", "data", "dfj") == nullptr);
}

TEST_CASE("interrupted runs resume to the same report") {
  TempDir dir("resume");
  const auto items = pointwise_items(30);
  Env full(judge());
  auto ref_spec = spec_for(dir.path / "run", Protocol::pointwise);
  ref_spec.out_dir = (dir.path / "ref").string();
  const auto reference = Harness(full.gw, full.prompts, ref_spec).run_pointwise(items);

  std::atomic<int> budget{40};
  auto perfect = judge();
  Env flaky([&](const gateway::ChatRequest& req) -> std::string {
    if (budget-- <= 0) throw TransportError("connection reset", false);
    return perfect(req);
  });
  const auto spec = spec_for(dir.path / "run", Protocol::pointwise);
  Harness first(flaky.gw, flaky.prompts, spec);
  const auto partial = first.run_pointwise(items);
  CHECK(get(partial, "rmse").support == 40);
  CHECK(partial != reference);

  // A crash mid-write leaves a torn line behind.
  const auto cache_file = fs::path(spec.out_dir) / "cache" / "judge-x__data.jsonl";
  REQUIRE(fs::exists(cache_file));
  { std::ofstream(cache_file, std::ios::app) << R"({"item_id": "s9#)"; }

  Harness second(full.gw, full.prompts, spec);
  const auto resumed = second.run_pointwise(items);
  CHECK(second.fresh_calls() == 110);
  CHECK(resumed == reference);
  CHECK(emit_report(resumed, ReportFormat::markdown) == emit_report(reference, ReportFormat::markdown));

  Harness third(full.gw, full.prompts, spec);
  CHECK(third.run_pointwise(items) == reference);
  CHECK(third.fresh_calls() == 0);
  CHECK(ResultCache(cache_file).size() == 150);
}

TEST_CASE("max_items takes a seeded slice") {
  TempDir dir("slice");
  const auto items = pointwise_items(10);
  std::vector<std::string> seen;
  std::mutex m;
  auto perfect = judge();
  Env env([&](const gateway::ChatRequest& req) {
    std::lock_guard lock(m);
    seen.push_back(gateway::prompt_text(req));
    return perfect(req);
  });
  auto spec = spec_for(dir.path / "a", Protocol::pointwise);
  spec.max_items = 7;
  spec.seed = 5;
  const auto r = Harness(env.gw, env.prompts, spec).run_pointwise(items);
  CHECK(r.rows[0].items == 7);
  auto first = seen;
  seen.clear();
  spec.out_dir = (dir.path / "b").string();
  Harness(env.gw, env.prompts, spec).run_pointwise(items);
  std::sort(first.begin(), first.end());
  std::sort(seen.begin(), seen.end());
  CHECK(first == seen);
}

TEST_CASE("run_spec reads datasets and writes reports") {
  TempDir dir("runspec");
  const auto spec = spec_for(dir.path, Protocol::pairwise);
  write_records(spec.dataset_ref, pairwise_items(50));
  Env env(judge());
  const auto r = run_spec(spec, env.gw, env.prompts);
  CHECK(*get(r, "accuracy").value == 1.0);
  CHECK(fs::exists(fs::path(spec.out_dir) / "report.json"));
  const auto collected = collect_reports(dir.path);
  CHECK(collected == r);
}

TEST_CASE("report emission") {
  MetricReport empty;
  CHECK(emit_report(empty, ReportFormat::csv) == "model,dataset,protocol,metric,value,support,skipped\n");
  CHECK(emit_report(empty, ReportFormat::markdown).find("| Model | Dataset | Items |") != std::string::npos);

  MetricReport r;
  r.rows.push_back({"zeta", "pw", "pairwise", {{"accuracy", 0.5, 10, 0}}, 10});
  r.rows.push_back({"alpha", "pw", "pairwise", {{"accuracy", 0.962, 990, 10}}, 1000});
  r.rows.push_back({"alpha", "pt", "pointwise", {{"rmse", 0.25, 4, 0}, {"pearson", std::nullopt, 4, 0}}, 4});
  const auto md = emit_report(r, ReportFormat::markdown);
  CHECK(md.find("| alpha | pw | 1000 | 0.9620 (skipped 10) |") != std::string::npos);
  CHECK(md.find("| alpha | pw") < md.find("| zeta | pw"));
  CHECK(md.find("## pairwise") < md.find("## pointwise"));
  CHECK(md.find("| n/a |") != std::string::npos);
  CHECK(md == emit_report(r, ReportFormat::markdown));
  const auto csv = emit_report(r, ReportFormat::csv);
  CHECK(csv.find("alpha,pt,pointwise,pearson,,4,0\n") != std::string::npos);
  CHECK(report_from_json(to_json(r)) == r);
  CHECK_THROWS_AS(parse_report_format("html"), ConfigError);
}

TEST_CASE("agreement: identical annotators and the published tallies") {
  std::vector<MetaJudgment> same;
  for (int i = 0; i < 20; ++i) {
    const std::string v = std::to_string(1 + i % 5);
    same.push_back({"i" + std::to_string(i), "ann1", "pointwise", v, v});
    same.push_back({"i" + std::to_string(i), "ann2", "pointwise", v, v});
  }
  const auto id = agreement_report(same, "pointwise");
  CHECK(id.status == "ok");
  CHECK(*id.mean_raw_agreement == 1.0);
  CHECK(*id.mean_kappa == doctest::Approx(1.0));
  CHECK(*id.mean_mse == 0.0);
  CHECK(*id.pairs[0].pearson == doctest::Approx(1.0));

  const auto tallies = judgments_from_tallies(88, 2, 10);
  const auto t = agreement_report(tallies, "pairwise");
  REQUIRE(t.pairs.size() == 1);
  CHECK(t.pairs[0].overlap == 100);
  CHECK(t.pairs[0].raw_agreement == 0.90);
  CHECK(t.pairs[0].both_correct == 88);
  CHECK(t.pairs[0].both_wrong == 2);
  CHECK(t.pairs[0].one_correct == 10);
  // Balanced marginals: p_e = 0.5, kappa = (0.9 - 0.5) / 0.5.
  CHECK(*t.pairs[0].kappa == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(*t.per_annotator[0].exact_match == doctest::Approx(0.93));
  CHECK(*t.per_annotator[1].exact_match == doctest::Approx(0.93));
  CHECK(agreed_items(tallies, "pairwise").size() == 90);
}

TEST_CASE("agreement: toy kappa, no overlap, bad values") {
  const std::vector<int> a{1, 1, 0, 0}, b{1, 0, 0, 0};
  std::vector<MetaJudgment> js;
  for (int i = 0; i < 4; ++i) {
    js.push_back({"i" + std::to_string(i), "x", "pairwise", a[i] ? "A" : "B", std::nullopt});
    js.push_back({"i" + std::to_string(i), "y", "pairwise", b[i] ? "A" : "B", std::nullopt});
  }
  CHECK(*agreement_report(js, "pairwise").mean_kappa == doctest::Approx(0.5));

  const std::vector<MetaJudgment> apart{{"i1", "x", "pointwise", "3", "3"}, {"i2", "y", "pointwise", "4", "5"}};
  const auto r = agreement_report(apart, "pointwise");
  CHECK(r.status == "no overlapping items between annotators");
  CHECK(r.pairs.empty());
  CHECK(*r.mean_mse == doctest::Approx(0.5));
  CHECK(agreement_report({}, "pointwise").status == "need at least two annotators");
  CHECK_THROWS_AS(meta_judgment_from_json(Json::parse(
                      R"({"item_id": "i", "annotator_id": "a", "kind": "pointwise", "value": 6})")),
                  ValidationError);
  CHECK(meta_judgment_from_json(to_json(apart[1])) == apart[1]);
  CHECK(r.to_markdown().find("no overlapping") != std::string::npos);
}
