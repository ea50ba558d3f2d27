// jf: command-line front end for selection, bootstrapping, assembly,
// evaluation and annotation.
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "jf/annotate/http_server.hpp"
#include "jf/annotate/service.hpp"
#include "jf/assemble/assembler.hpp"
#include "jf/bootstrap/engine.hpp"
#include "jf/bootstrap/fidelity.hpp"
#include "jf/bootstrap/mock_world.hpp"
#include "jf/core/config.hpp"
#include "jf/core/error.hpp"
#include "jf/core/log.hpp"
#include "jf/core/serialize.hpp"
#include "jf/eval/agreement.hpp"
#include "jf/eval/harness.hpp"
#include "jf/eval/report.hpp"
#include "jf/gateway/backend_config.hpp"
#include "jf/gateway/http_backend.hpp"
#include "jf/select/manifest.hpp"
#include "jf/select/prompt_filter.hpp"
#include "jf/select/set_cover.hpp"

using namespace jf;
namespace fs = std::filesystem;

namespace {

#ifndef JF_DEFAULT_CONFIG_DIR
#define JF_DEFAULT_CONFIG_DIR "config"
#endif
#ifndef JF_DEFAULT_PROMPT_DIR
#define JF_DEFAULT_PROMPT_DIR "prompts"
#endif

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string lines_of(const std::vector<Json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

Json load_config(const std::string& path) { return path.empty() ? Json::object() : load_toml(path); }

// Mock gateways answer from the deterministic mock world; real ones talk to
// the [backend] table's endpoint.
std::unique_ptr<gateway::Gateway> make_gateway(const Json& doc, bool mock, bootstrap::MockWorldOptions world = {}) {
  const Json table = doc.contains("backend") ? doc.at("backend") : Json::object();
  if (mock) {
    gateway::BackendConfig cfg;
    cfg.max_parallel = table.value("max_parallel", 4);
    auto backend = std::make_shared<gateway::FunctionBackend>(bootstrap::mock_world_chat(std::move(world)));
    return std::make_unique<gateway::Gateway>(backend, cfg);
  }
  auto cfg = gateway::backend_config_from(table);
  if (cfg.base_url.empty()) throw ConfigError("backend.base_url is required (or pass --mock)");
  return std::make_unique<gateway::Gateway>(std::make_shared<gateway::HttpBackend>(cfg), cfg);
}

int cmd_select(const std::string& pool_path, std::size_t k, std::size_t reserve, std::uint64_t seed,
               std::size_t window, const std::string& out) {
  std::vector<select::LabeledImage> pool;
  for (const auto& j : read_jsonl(pool_path)) pool.push_back(select::labeled_image_from_json(j));
  const auto sel = select::select_with_reserve(pool, k, reserve, seed, window);
  std::vector<Json> rows;
  for (std::size_t i = 0; i < sel.selection.steps.size(); ++i) {
    const auto& s = sel.selection.steps[i];
    rows.push_back({{"image_id", pool[s.index].image_id}, {"role", "selected"}, {"step", i}, {"gain", s.gain}});
  }
  for (std::size_t idx : sel.reserved) rows.push_back({{"image_id", pool[idx].image_id}, {"role", "reserved"}});
  write_text(out, lines_of(rows));
  std::cerr << "covered " << sel.selection.covered_labels << " of " << sel.selection.total_labels << " labels\n";
  return 0;
}

int cmd_filter(const std::string& in, const std::string& keywords, const std::string& out,
               const std::string& rejected) {
  std::ifstream f(in);
  if (!f) throw Error("cannot read " + in);
  std::vector<std::string> corpus;
  for (std::string line; std::getline(f, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    corpus.push_back(line);
  }
  const auto res = select::filter_prompts(corpus, select::KeywordConfig::load(keywords));
  std::vector<Json> rows;
  for (const auto& c : res.accepted) rows.push_back(select::to_json(c));
  write_text(out, lines_of(rows));
  if (!rejected.empty()) {
    rows.clear();
    for (const auto& c : res.rejected) rows.push_back(select::to_json(c));
    write_text(rejected, lines_of(rows));
  }
  std::cerr << res.accepted.size() << " accepted, " << res.rejected.size() << " rejected\n";
  return 0;
}

int cmd_manifest(const std::string& in, std::size_t total, std::uint64_t seed, const std::string& model_tag,
                 const std::string& out) {
  std::vector<select::PromptCandidate> pool;
  for (const auto& j : read_jsonl(in)) pool.push_back(select::prompt_candidate_from_json(j));
  const auto sel = select::balanced_select(pool, total, seed);
  for (const auto& line : sel.log) log_info(line);
  const auto manifest = select::build_manifest(sel.selected, model_tag, seed);
  if (out.empty() || out == "-") {
    std::vector<Json> rows;
    for (const auto& m : manifest) rows.push_back(select::to_json(m));
    std::cout << lines_of(rows);
  } else {
    select::write_manifest(out, manifest);
  }
  return 0;
}

struct BootstrapArgs {
  std::string samples, annotations, config, out, diag;
  std::string prompts = JF_DEFAULT_PROMPT_DIR;
  std::string taxonomy = std::string(JF_DEFAULT_CONFIG_DIR) + "/flag_taxonomy.toml";
  int workers = 4;
  bool mock = false;
};

int cmd_bootstrap(const BootstrapArgs& a) {
  const Json doc = load_config(a.config);
  auto cfg = bootstrap::BootstrapConfig::from_json(doc);
  if (a.mock) {
    for (auto* tag : {&cfg.models.gen, &cfg.models.eval, &cfg.models.para}) {
      if (tag->empty()) *tag = "mock";
    }
  }
  const auto samples = read_records<Sample>(a.samples);
  std::map<std::string, HumanAnnotation> annotations;
  if (!a.annotations.empty()) {
    for (auto& h : read_records<HumanAnnotation>(a.annotations)) annotations.emplace(h.sample_id, std::move(h));
  }
  const auto prompts = PromptLibrary::load(a.prompts);
  const auto taxonomy = FlagTaxonomy::load(a.taxonomy);
  auto gw = make_gateway(doc, a.mock, {cfg.levels});
  bootstrap::BootstrapEngine engine(*gw, prompts, taxonomy, cfg);
  const auto records = engine.bootstrap_all(samples, annotations, a.workers);
  write_records(a.out, records);
  std::size_t complete = 0, variants = 0;
  std::vector<Json> diag;
  for (const auto& r : records) {
    complete += r.complete;
    variants += bootstrap::variant_count(r);
    Json traces = Json::array();
    for (const auto& t : r.diagnostics) traces.push_back(to_json(t));
    diag.push_back({{"sample_id", r.sample_id},
                    {"complete", r.complete},
                    {"levels", r.extra.value("levels", Json::object())},
                    {"traces", traces},
                    {"notes", r.notes}});
  }
  if (!a.diag.empty()) write_jsonl(a.diag, diag);
  std::cerr << records.size() << " records, " << complete << " complete, " << variants << " variants, "
            << gw->calls() << " calls\n";
  return 0;
}

int cmd_fidelity(const std::string& records_path, const std::string& config, bool mock, const std::string& out) {
  const Json doc = load_config(config);
  auto tags = gateway::model_tags_from(doc.contains("models") ? doc.at("models") : Json::object());
  if (tags.embed.empty()) tags.embed = "mock";
  auto gw = make_gateway(doc, mock);
  std::vector<std::string> originals, variants;
  bootstrap::collect_paraphrase_pairs(read_records<BootstrapRecord>(records_path), originals, variants);
  const auto report = bootstrap::verify_paraphrase_fidelity(
      originals, variants, [&](std::span<const std::string> toks) {
        return gw->embed(std::vector<std::string>(toks.begin(), toks.end()), tags.embed);
      });
  write_text(out, report.to_json().dump(2) + "\n");
  return 0;
}

int cmd_assemble(const std::string& kind, const std::string& records_path, std::uint64_t seed,
                 const std::string& out, int pairs_per_sample, std::size_t train, std::size_t test,
                 const std::string& split_prefix) {
  const auto records = read_records<BootstrapRecord>(records_path);
  auto write_split = [&](const auto& items) {
    if (split_prefix.empty()) return;
    const auto s = assemble::split(items, train, test, seed);
    write_records(split_prefix + ".train.jsonl", s.train);
    write_records(split_prefix + ".test.jsonl", s.test);
    if (!s.note.empty()) log_warning(s.note);
    std::cerr << "split: " << s.train.size() << " train, " << s.test.size() << " test\n";
  };
  if (kind == "pointwise") {
    const auto items = assemble::build_pointwise(records);
    write_records(out, items);
    std::cerr << items.size() << " pointwise items\n";
    write_split(items);
  } else if (kind == "pairwise") {
    const auto items = assemble::build_pairwise(records, pairs_per_sample, seed);
    write_records(out, items);
    std::cerr << items.size() << " pairwise items\n";
    write_split(items);
  } else {
    std::vector<Json> rows;
    for (const auto& r : eval::reason_items(records)) rows.push_back(eval::to_json(r));
    write_jsonl(out, rows);
    std::cerr << rows.size() << " reason items\n";
  }
  return 0;
}

// Perfect mock verdicts: the label recorded in the dataset itself.
std::map<std::string, std::string> dataset_verdicts(const eval::RunSpec& spec) {
  std::map<std::string, std::string> out;
  if (spec.protocol != eval::Protocol::detect && spec.protocol != eval::Protocol::reason) return out;
  for (const auto& j : read_jsonl(spec.dataset_ref)) {
    out[j.at("image_ref").get<std::string>()] = j.at("label").get<std::string>();
  }
  return out;
}

int cmd_evaluate(const std::string& spec_path, const std::string& out_dir, bool mock) {
  const Json doc = load_toml(spec_path);
  auto spec = eval::RunSpec::from_json(doc);
  if (!out_dir.empty()) spec.out_dir = out_dir;
  if (spec.out_dir.empty()) spec.out_dir = (fs::path("runs") / spec.name()).string();
  const auto prompts = PromptLibrary::load(doc.value("prompt_dir", std::string(JF_DEFAULT_PROMPT_DIR)));
  bootstrap::MockWorldOptions world;
  if (mock) {
    auto verdicts = dataset_verdicts(spec);
    world.verdict = [verdicts](const std::string& image) {
      auto it = verdicts.find(image);
      return it == verdicts.end() ? std::string("fake") : it->second;
    };
  }
  auto gw = make_gateway(doc, mock, world);
  const auto report = eval::run_spec(spec, *gw, prompts, spec.judge_model.empty() ? nullptr : gw.get());
  std::cout << eval::emit_report(report, eval::ReportFormat::markdown);
  std::cerr << "report written to " << spec.out_dir << "\n";
  return 0;
}

int cmd_agree(const std::string& in, const std::string& out, const std::string& taxonomy_path,
              const std::string& json_out) {
  const auto taxonomy = FlagTaxonomy::load(taxonomy_path);
  std::vector<Json> lines;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(in)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    for (auto& j : read_jsonl(f)) {
      if (j.is_object() && j.contains("kind") && j.contains("item_id")) lines.push_back(std::move(j));
    }
  }
  std::string md;
  Json all = Json::object();
  for (auto kind : {annotate::TaskKind::artifact_flags, annotate::TaskKind::pointwise_rating,
                    annotate::TaskKind::pairwise_preference}) {
    const auto js = annotate::submission_judgments(lines, kind, taxonomy);
    if (js.empty()) continue;
    const auto report = eval::agreement_report(js, annotate::agreement_kind(kind));
    md += "## " + std::string(annotate::to_string(kind)) + "\n\n" + report.to_markdown() + "\n";
    all[std::string(annotate::to_string(kind))] = report.to_json();
  }
  if (md.empty()) md = "No submissions found.\n";
  write_text(out, "# Annotator agreement\n\n" + md);
  if (!json_out.empty()) write_text(json_out, all.dump(2) + "\n");
  return 0;
}

int cmd_report(const std::string& runs, const std::string& format, const std::string& out) {
  write_text(out, eval::emit_report(eval::collect_reports(runs), eval::parse_report_format(format)));
  return 0;
}

struct ServeArgs {
  std::string store, samples, pointwise, pairwise, images;
  std::string taxonomy = std::string(JF_DEFAULT_CONFIG_DIR) + "/flag_taxonomy.toml";
  std::string host = "127.0.0.1";
  std::string token_env = "JF_ANNOTATE_TOKEN";
  int port = 8080;
  std::size_t pilot = 10;
  std::size_t overlap = 100;
};

annotate::HttpServer* g_server = nullptr;

int cmd_serve(const ServeArgs& a) {
  annotate::ServiceOptions opts;
  opts.pilot_count = a.pilot;
  opts.overlap_count = a.overlap;
  annotate::AnnotationService svc(a.store, FlagTaxonomy::load(a.taxonomy), opts);
  if (!a.samples.empty()) svc.add_artifact_tasks(read_records<Sample>(a.samples));
  if (!a.pointwise.empty()) svc.add_pointwise_tasks(read_records<PointwiseItem>(a.pointwise));
  if (!a.pairwise.empty()) svc.add_pairwise_tasks(read_records<PairwiseItem>(a.pairwise));
  annotate::ServerOptions so;
  so.host = a.host;
  so.port = a.port;
  so.image_root = a.images.empty() ? fs::current_path() : fs::path(a.images);
  if (const char* t = std::getenv(a.token_env.c_str())) so.bearer_token = t;
  annotate::HttpServer server(svc, so);
  const int port = server.bind();
  std::cerr << "serving on http://" << a.host << ":" << port << "\n";
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jf: image-forensics reasoning dataset toolkit"};
  app.require_subcommand(1);

  std::string s_pool, s_out;
  std::size_t s_k = 1000, s_reserve = 0, s_window = 3;
  std::uint64_t s_seed = 0;
  auto* sel = app.add_subcommand("select", "Pick images by stochastic greedy label coverage");
  sel->add_option("--pool", s_pool, "Labeled images (jsonl)")->required();
  sel->add_option("--k", s_k, "Images to select");
  sel->add_option("--reserve", s_reserve, "Extra disjoint images to reserve");
  sel->add_option("--seed", s_seed);
  sel->add_option("--window", s_window, "Candidate window; 1 is plain greedy");
  sel->add_option("--out", s_out, "Output jsonl (default stdout)");

  std::string f_in, f_keywords = std::string(JF_DEFAULT_CONFIG_DIR) + "/prompt_keywords.toml", f_out, f_rej;
  auto* filt = app.add_subcommand("filter-prompts", "Score and filter a prompt corpus");
  filt->add_option("--in", f_in, "One prompt per line")->required();
  filt->add_option("--keywords", f_keywords, "Keyword classes (toml)");
  filt->add_option("--out", f_out, "Accepted candidates (jsonl)");
  filt->add_option("--rejected", f_rej, "Rejected candidates (jsonl)");

  std::string m_in, m_out, m_model;
  std::size_t m_total = 1000;
  std::uint64_t m_seed = 0;
  auto* man = app.add_subcommand("manifest", "Category-balanced generation manifest");
  man->add_option("--in", m_in, "Scored candidates (jsonl)")->required();
  man->add_option("--total", m_total);
  man->add_option("--seed", m_seed);
  man->add_option("--model-tag", m_model)->required();
  man->add_option("--out", m_out);

  BootstrapArgs b;
  auto* boot = app.add_subcommand("bootstrap", "Generate graded reasoning responses");
  boot->add_option("--samples", b.samples)->required();
  boot->add_option("--annotations", b.annotations);
  boot->add_option("--config", b.config);
  boot->add_option("--out", b.out)->required();
  boot->add_option("--diag", b.diag);
  boot->add_option("--prompts", b.prompts);
  boot->add_option("--taxonomy", b.taxonomy);
  boot->add_option("--workers", b.workers);
  boot->add_flag("--mock", b.mock, "Use the deterministic mock world instead of a backend");

  std::string fi_records, fi_config, fi_out;
  bool fi_mock = false;
  auto* fid = app.add_subcommand("fidelity", "Paraphrase fidelity (embedding match and BLEU-4)");
  fid->add_option("--records", fi_records)->required();
  fid->add_option("--config", fi_config);
  fid->add_option("--out", fi_out);
  fid->add_flag("--mock", fi_mock);

  std::string a_kind, a_records, a_out, a_split;
  std::uint64_t a_seed = 0;
  int a_pairs = 50;
  std::size_t a_train = 0, a_test = 0;
  auto* asmb = app.add_subcommand("assemble", "Build pointwise, pairwise or reason datasets");
  asmb->add_option("kind", a_kind)->required()->check(CLI::IsMember({"pointwise", "pairwise", "reason"}));
  asmb->add_option("--records", a_records)->required();
  asmb->add_option("--seed", a_seed);
  asmb->add_option("--out", a_out)->required();
  asmb->add_option("--pairs-per-sample", a_pairs);
  asmb->add_option("--split", a_split, "Write <prefix>.train.jsonl and <prefix>.test.jsonl");
  asmb->add_option("--train", a_train);
  asmb->add_option("--test", a_test);

  std::string e_spec, e_out;
  bool e_mock = false;
  auto* ev = app.add_subcommand("evaluate", "Run one evaluation spec");
  ev->add_option("--spec", e_spec)->required();
  ev->add_option("--out-dir", e_out);
  ev->add_flag("--mock", e_mock, "Answer from the mock world (perfect judge)");

  std::string g_in, g_out, g_json, g_tax = std::string(JF_DEFAULT_CONFIG_DIR) + "/flag_taxonomy.toml";
  auto* agr = app.add_subcommand("agree", "Inter-annotator agreement over stored submissions");
  agr->add_option("--in", g_in)->required();
  agr->add_option("--out", g_out);
  agr->add_option("--json", g_json);
  agr->add_option("--taxonomy", g_tax);

  std::string r_runs, r_format = "md", r_out;
  auto* rep = app.add_subcommand("report", "Merge run reports into one table");
  rep->add_option("--runs", r_runs)->required();
  rep->add_option("--format", r_format)->check(CLI::IsMember({"md", "markdown", "csv"}));
  rep->add_option("--out", r_out);

  ServeArgs sv;
  auto* srv = app.add_subcommand("serve", "Annotation service over HTTP");
  srv->add_option("--store", sv.store)->required();
  srv->add_option("--samples", sv.samples);
  srv->add_option("--pointwise", sv.pointwise);
  srv->add_option("--pairwise", sv.pairwise);
  srv->add_option("--images", sv.images, "Root that image_ref paths resolve against");
  srv->add_option("--taxonomy", sv.taxonomy);
  srv->add_option("--host", sv.host);
  srv->add_option("--port", sv.port);
  srv->add_option("--pilot", sv.pilot);
  srv->add_option("--overlap", sv.overlap);
  srv->add_option("--token-env", sv.token_env, "Environment variable holding the bearer token");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sel) return cmd_select(s_pool, s_k, s_reserve, s_seed, s_window, s_out);
    if (*filt) return cmd_filter(f_in, f_keywords, f_out, f_rej);
    if (*man) return cmd_manifest(m_in, m_total, m_seed, m_model, m_out);
    if (*boot) return cmd_bootstrap(b);
    if (*fid) return cmd_fidelity(fi_records, fi_config, fi_mock, fi_out);
    if (*asmb) return cmd_assemble(a_kind, a_records, a_seed, a_out, a_pairs, a_train, a_test, a_split);
    if (*ev) return cmd_evaluate(e_spec, e_out, e_mock);
    if (*agr) return cmd_agree(g_in, g_out, g_tax, g_json);
    if (*rep) return cmd_report(r_runs, r_format, r_out);
    if (*srv) return cmd_serve(sv);
  } catch (const std::exception& e) {
    std::cerr << "jf: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
