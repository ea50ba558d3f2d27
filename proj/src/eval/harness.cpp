#include "jf/eval/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

#include "jf/core/error.hpp"
#include "jf/core/log.hpp"
#include "jf/core/rng.hpp"
#include "jf/core/serialize.hpp"
#include "jf/metrics/classification.hpp"
#include "jf/metrics/embedding.hpp"
#include "jf/metrics/lexical.hpp"
#include "jf/metrics/parsers.hpp"
#include "jf/metrics/statistics.hpp"

namespace jf::eval {
namespace {

using metrics::MetricValue;

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_';
  return out.empty() ? "_" : out;
}

MetricValue metric(std::string name, std::optional<double> value, std::size_t support, std::size_t skipped) {
  return {std::move(name), value, support, skipped};
}

// Mean over scored items; items with no score count as skipped.
MetricValue mean_metric(std::string name, const std::vector<std::optional<double>>& scores) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : scores) {
    if (!s) continue;
    sum += *s;
    ++n;
  }
  return metric(std::move(name), n ? std::optional<double>(sum / double(n)) : std::nullopt, n, scores.size() - n);
}

}  // namespace

Json to_json(const ReasonItem& v) {
  return Json{{"sample_id", v.sample_id},
              {"image_ref", v.image_ref},
              {"label", to_string(v.label)},
              {"reference", v.reference}};
}

ReasonItem reason_item_from_json(const Json& j) {
  try {
    ReasonItem v;
    v.sample_id = j.at("sample_id").get<std::string>();
    v.image_ref = j.at("image_ref").get<std::string>();
    v.label = parse_label(j.at("label").get<std::string>());
    v.reference = j.at("reference").get<std::string>();
    return v;
  } catch (const Json::exception& e) {
    throw ValidationError("reason item", e.what());
  }
}

std::vector<ReasonItem> reason_items(const std::vector<BootstrapRecord>& records) {
  std::vector<ReasonItem> out;
  for (const auto& r : records) {
    if (r.complete && r.gold) out.push_back({r.sample_id, r.image_ref, r.label, r.gold->text});
  }
  return out;
}

ResultCache::ResultCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ifstream in(path_, std::ios::binary);
  if (in.seekg(-1, std::ios::end) && in.get() != '\n') {
    std::ofstream(path_, std::ios::app | std::ios::binary) << '\n';
  }
  in.clear();
  in.seekg(0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = Json::parse(line);
      entries_[key(j.at("item_id").get<std::string>(), j.at("model").get<std::string>(),
                   j.at("prompt_hash").get<std::string>())] = j.at("reply").get<std::string>();
    } catch (const std::exception&) {
      log_warning(path_.string() + ":" + std::to_string(lineno) + ": ignoring unreadable cache line");
    }
  }
}

std::string ResultCache::key(const std::string& item_id, const std::string& model, const std::string& hash) {
  return item_id + '\x1f' + model + '\x1f' + hash;
}

std::optional<std::string> ResultCache::get(const std::string& item_id, const std::string& model,
                                            const std::string& prompt_hash) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(key(item_id, model, prompt_hash)); it != entries_.end()) return it->second;
  return std::nullopt;
}

void ResultCache::put(const std::string& item_id, const std::string& model, const std::string& prompt_hash,
                      const std::string& reply) {
  const std::string line =
      Json{{"item_id", item_id}, {"model", model}, {"prompt_hash", prompt_hash}, {"reply", reply}}.dump();
  std::lock_guard lock(mutex_);
  {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << line << '\n';
    out.flush();
    if (!out) throw Error("cannot append to " + path_.string());
  }
  entries_[key(item_id, model, prompt_hash)] = reply;
}

std::size_t ResultCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string prompt_hash(const std::string& prompt) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(prompt)));
  return buf;
}

std::string rationale_of(const std::string& text) {
  if (auto t = metrics::extract_tag(text, "think")) return *t;
  if (auto t = metrics::extract_tag(text, "reasoning")) return *t;
  return text;
}

Harness::Harness(gateway::Gateway& gw, const PromptLibrary& prompts, RunSpec spec)
    : gw_(gw), prompts_(prompts), spec_(std::move(spec)) {
  validate(spec_);
}

std::filesystem::path Harness::cache_path(const std::string& model, const std::string& suffix) const {
  return std::filesystem::path(spec_.out_dir) / "cache" /
         (sanitize(model) + "__" + sanitize(spec_.name()) + suffix + ".jsonl");
}

std::vector<std::size_t> Harness::slice(std::size_t n) const {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (spec_.max_items == 0 || spec_.max_items >= n) return idx;
  Rng rng(derive_seed(spec_.seed, "slice"));
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(spec_.max_items);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::optional<std::string>> Harness::ask(gateway::Gateway& gw, ResultCache& cache,
                                                     const std::vector<Query>& queries, const std::string& model,
                                                     const std::string& purpose) {
  std::vector<std::optional<std::string>> out(queries.size());
  std::atomic<std::size_t> next{0}, fresh{0}, failed{0};
  auto work = [&] {
    for (std::size_t i = next++; i < queries.size(); i = next++) {
      const auto& q = queries[i];
      const auto hash = prompt_hash(q.prompt + '\x1f' + q.image);
      if (auto hit = cache.get(q.item_id, model, hash)) {
        out[i] = std::move(hit);
        continue;
      }
      try {
        auto req = gateway::user_request(q.prompt, q.image.empty() ? std::nullopt : std::optional(q.image), model,
                                         spec_.temperature, purpose);
        req.max_tokens = spec_.max_tokens;
        std::string reply = gw.chat(req);
        ++fresh;
        cache.put(q.item_id, model, hash, reply);
        out[i] = std::move(reply);
      } catch (const TransportError& e) {
        ++failed;
        log_warning(q.item_id + ": " + e.what());
      }
    }
  };
  const int n = std::max(1, std::min<int>(spec_.workers, static_cast<int>(queries.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  fresh_calls_ += fresh;
  failures_ += failed;
  return out;
}

MetricReport Harness::finish(std::vector<MetricValue> values, std::size_t items, Json extra) {
  MetricReport r;
  r.rows.push_back({spec_.model_tag, spec_.name(), std::string(to_string(spec_.protocol)), std::move(values), items});
  r.provenance.push_back(spec_.hash());
  if (!extra.is_null()) r.extra[spec_.model_tag + "/" + spec_.name()] = std::move(extra);
  return r;
}

MetricReport Harness::run_pointwise(const std::vector<PointwiseItem>& all) {
  fresh_calls_ = failures_ = 0;
  const auto ids = item_ids(all);
  const auto idx = slice(all.size());
  std::vector<Query> qs;
  for (std::size_t i : idx) {
    qs.push_back({ids[i],
                  prompts_.get(TemplateName::pointwise_eval)
                      .render({{"label", std::string(to_string(all[i].label))},
                               {"candidate_response", all[i].response_text}}),
                  all[i].image_ref});
  }
  ResultCache cache(cache_path(spec_.model_tag));
  const auto replies = ask(gw_, cache, qs, spec_.model_tag, "pointwise_eval");
  std::vector<double> preds, targets;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (!replies[k]) continue;
    if (auto v = metrics::parse_pointwise(*replies[k])) {
      preds.push_back(v->rating);
      targets.push_back(all[idx[k]].target_rating);
    }
  }
  const std::size_t n = idx.size(), ok = preds.size();
  std::vector<MetricValue> values;
  if (ok > 0) {
    const auto e = metrics::regression_errors(preds, targets);
    values.push_back(metric("rmse", e.rmse, ok, n - ok));
    values.push_back(metric("mse", e.mse, ok, n - ok));
  } else {
    values.push_back(metric("rmse", std::nullopt, 0, n));
    values.push_back(metric("mse", std::nullopt, 0, n));
  }
  std::optional<double> p, s;
  if (ok >= 2) {
    const auto c = metrics::correlations(preds, targets);
    p = c.pearson;
    s = c.spearman;
  }
  values.push_back(metric("pearson", p, ok, n - ok));
  values.push_back(metric("spearman", s, ok, n - ok));
  return finish(std::move(values), n);
}

MetricReport Harness::run_pairwise(const std::vector<PairwiseItem>& all) {
  fresh_calls_ = failures_ = 0;
  const auto ids = item_ids(all);
  const auto idx = slice(all.size());
  std::vector<Query> qs;
  for (std::size_t i : idx) {
    qs.push_back({ids[i],
                  prompts_.get(TemplateName::pairwise_eval)
                      .render({{"label", std::string(to_string(all[i].label))},
                               {"response_a", all[i].response_a},
                               {"response_b", all[i].response_b}}),
                  all[i].image_ref});
  }
  ResultCache cache(cache_path(spec_.model_tag));
  const auto replies = ask(gw_, cache, qs, spec_.model_tag, "pairwise_eval");
  std::vector<std::optional<Choice>> choices;
  std::vector<Choice> answers;
  std::size_t chose_a = 0, parsed = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    choices.push_back(replies[k] ? metrics::parse_pairwise(*replies[k]) : std::nullopt);
    answers.push_back(all[idx[k]].answer);
    if (choices.back()) {
      ++parsed;
      chose_a += *choices.back() == Choice::A;
    }
  }
  std::vector<MetricValue> values;
  values.push_back(metrics::pairwise_accuracy(choices, answers));
  values.back().name = "accuracy";
  values.push_back(metric("chose_a", parsed ? std::optional<double>(double(chose_a) / double(parsed)) : std::nullopt,
                          parsed, idx.size() - parsed));
  return finish(std::move(values), idx.size());
}

MetricReport Harness::run_detect(const std::vector<Sample>& all) {
  fresh_calls_ = failures_ = 0;
  const auto idx = slice(all.size());
  std::vector<Query> qs;
  for (std::size_t i : idx) {
    qs.push_back({all[i].id, prompts_.get(TemplateName::detect).render({{"image", all[i].image_ref}}),
                  all[i].image_ref});
  }
  ResultCache cache(cache_path(spec_.model_tag));
  const auto replies = ask(gw_, cache, qs, spec_.model_tag, "detect");
  metrics::ConfusionMatrix cm;
  std::size_t parsed = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto pred = replies[k] ? metrics::parse_detect(*replies[k]) : std::nullopt;
    parsed += pred.has_value();
    cm.add(all[idx[k]].label, pred);
  }
  const auto s = metrics::detection_scores(cm);
  const std::size_t n = idx.size(), skip = n - parsed;
  std::vector<MetricValue> values{metric("real_acc", s.real_acc, parsed, skip),
                                  metric("real_f1", s.real_f1, parsed, skip),
                                  metric("fake_acc", s.fake_acc, parsed, skip),
                                  metric("fake_f1", s.fake_f1, parsed, skip),
                                  metric("overall_acc", s.overall_acc, parsed, skip),
                                  metric("overall_f1", s.overall_f1, parsed, skip)};
  Json confusion = Json::object();
  for (Label t : {Label::real, Label::fake, Label::edited}) {
    Json row = Json::object();
    for (Label p : {Label::real, Label::fake, Label::edited}) row[std::string(to_string(p))] = cm.at(t, p);
    row["unparsed"] = cm.unparsed(t);
    confusion[std::string(to_string(t))] = row;
  }
  return finish(std::move(values), n, Json{{"confusion", confusion}});
}

MetricReport Harness::run_reason(const std::vector<ReasonItem>& all, gateway::Gateway* judge) {
  fresh_calls_ = failures_ = 0;
  const auto idx = slice(all.size());
  std::vector<Query> qs;
  for (std::size_t i : idx) {
    qs.push_back({all[i].sample_id, prompts_.get(TemplateName::reason).render({{"image", all[i].image_ref}}),
                  all[i].image_ref});
  }
  ResultCache cache(cache_path(spec_.model_tag));
  const auto replies = ask(gw_, cache, qs, spec_.model_tag, "reason");

  const std::size_t n = idx.size();
  std::vector<std::optional<double>> b1(n), b2(n), b3(n), r1(n), r2(n), rl(n), met(n), emb(n), dfj(n);
  metrics::TokenEmbedder embedder;
  if (!spec_.embed_model.empty()) {
    embedder = [this](std::span<const std::string> toks) {
      return gw_.embed(std::vector<std::string>(toks.begin(), toks.end()), spec_.embed_model);
    };
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!replies[k]) continue;
    const auto cand = metrics::tokenize(rationale_of(*replies[k]));
    const auto ref = metrics::tokenize(rationale_of(all[idx[k]].reference));
    if (const auto b = metrics::bleu(cand, ref, 3); !b.skipped && !ref.empty()) {
      b1[k] = b.cumulative[0];
      b2[k] = b.cumulative[1];
      b3[k] = b.cumulative[2];
    }
    if (const auto r = metrics::rouge(cand, ref, metrics::RougeVariant::rouge1); !r.skipped) r1[k] = r.f1;
    if (const auto r = metrics::rouge(cand, ref, metrics::RougeVariant::rouge2); !r.skipped) r2[k] = r.f1;
    if (const auto r = metrics::rouge(cand, ref, metrics::RougeVariant::rougeL); !r.skipped) rl[k] = r.f1;
    if (!cand.empty() && !ref.empty()) met[k] = metrics::meteor(cand, ref).score;
    if (embedder) {
      if (const auto e = metrics::embed_match(cand, ref, embedder); !e.skipped) emb[k] = e.f1;
    }
  }
  if (judge && !spec_.judge_model.empty()) {
    std::vector<Query> jq;
    std::vector<std::size_t> pos;
    for (std::size_t k = 0; k < n; ++k) {
      if (!replies[k]) continue;
      jq.push_back({all[idx[k]].sample_id,
                    prompts_.get(TemplateName::pointwise_eval)
                        .render({{"label", std::string(to_string(all[idx[k]].label))},
                                 {"candidate_response", *replies[k]}}),
                    all[idx[k]].image_ref});
      pos.push_back(k);
    }
    ResultCache jcache(cache_path(spec_.judge_model, ".judge"));
    const double saved = spec_.temperature;
    spec_.temperature = 0.0;
    const auto verdicts = ask(*judge, jcache, jq, spec_.judge_model, "pointwise_eval");
    spec_.temperature = saved;
    for (std::size_t j = 0; j < jq.size(); ++j) {
      if (!verdicts[j]) continue;
      if (auto v = metrics::parse_pointwise(*verdicts[j])) dfj[pos[j]] = v->rating;
    }
  }
  std::vector<MetricValue> values{mean_metric("bleu1", b1),  mean_metric("bleu2", b2), mean_metric("bleu3", b3),
                                  mean_metric("rouge1", r1), mean_metric("rouge2", r2), mean_metric("rougeL", rl),
                                  mean_metric("meteor", met)};
  if (embedder) values.push_back(mean_metric("embed", emb));
  if (judge && !spec_.judge_model.empty()) values.push_back(mean_metric("dfj", dfj));
  return finish(std::move(values), n);
}

MetricReport run_spec(const RunSpec& spec, gateway::Gateway& gw, const PromptLibrary& prompts,
                      gateway::Gateway* judge) {
  Harness h(gw, prompts, spec);
  MetricReport report;
  switch (spec.protocol) {
    case Protocol::pointwise:
      report = h.run_pointwise(read_records<PointwiseItem>(spec.dataset_ref));
      break;
    case Protocol::pairwise:
      report = h.run_pairwise(read_records<PairwiseItem>(spec.dataset_ref));
      break;
    case Protocol::detect:
      report = h.run_detect(read_records<Sample>(spec.dataset_ref));
      break;
    case Protocol::reason: {
      std::vector<ReasonItem> items;
      for (const auto& j : read_jsonl(spec.dataset_ref)) items.push_back(reason_item_from_json(j));
      report = h.run_reason(items, judge);
      break;
    }
  }
  const std::filesystem::path out(spec.out_dir);
  std::filesystem::create_directories(out);
  {
    std::ofstream f(out / "report.json", std::ios::binary);
    f << to_json(report).dump(2) << '\n';
  }
  {
    std::ofstream f(out / "report.md", std::ios::binary);
    f << emit_report(report, ReportFormat::markdown);
  }
  return report;
}

}  // namespace jf::eval
