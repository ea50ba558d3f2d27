#include "jf/bootstrap/engine.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "jf/bootstrap/reply_parsing.hpp"
#include "jf/core/error.hpp"
#include "jf/core/log.hpp"
#include "jf/metrics/parsers.hpp"

namespace jf::bootstrap {
namespace {

constexpr const char* kGenericFeedback =
    "The evaluator reply could not be read. Revise the response so its quality clearly matches "
    "the intended rating.";

Json box_json(const BBox& b) {
  return Json{{"coordinates", {b.x1, b.y1, b.x2, b.y2}}, {"ref_exp", b.ref_exp}};
}

std::string rating_keys_format(const std::vector<int>& levels, const char* stem, const char* value) {
  Json j = Json::object();
  for (int r : levels) j[std::string(stem) + std::to_string(r)] = value;
  return j.dump();
}

std::string join_levels(const std::vector<int>& levels, const char* stem) {
  std::string out;
  for (int r : levels) out += (out.empty() ? "" : ", ") + std::string(stem) + std::to_string(r);
  return out;
}

template <typename T>
void read(const Json& t, const char* key, T& slot) {
  if (!t.is_object() || !t.contains(key)) return;
  try {
    slot = t.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("bootstrap config: wrong type for ") + key);
  }
}

}  // namespace

BootstrapConfig BootstrapConfig::from_json(const Json& doc, const gateway::EnvLookup& env) {
  BootstrapConfig cfg;
  const Json& t = doc.contains("bootstrap") ? doc.at("bootstrap") : doc;
  read(t, "levels", cfg.levels);
  read(t, "alpha", cfg.alpha);
  read(t, "max_iterations", cfg.max_iterations);
  read(t, "paraphrase_k", cfg.paraphrase_k);
  read(t, "seed", cfg.seed);
  read(t, "gen_temperature", cfg.gen_temperature);
  read(t, "eval_temperature", cfg.eval_temperature);
  read(t, "para_temperature", cfg.para_temperature);
  read(t, "gold_format_retries", cfg.gold_format_retries);
  read(t, "max_tokens", cfg.max_tokens);
  read(t, "paraphrase_instruction", cfg.paraphrase_instruction);
  cfg.models = gateway::model_tags_from(doc.contains("models") ? doc.at("models") : Json::object(), env);
  validate(cfg);
  return cfg;
}

void validate(const BootstrapConfig& cfg) {
  if (cfg.levels < 2 || cfg.levels > kMaxRating) throw ConfigError("bootstrap: levels must be in 2..5");
  if (cfg.alpha < 0) throw ConfigError("bootstrap: alpha must be >= 0");
  if (cfg.max_iterations < 1) throw ConfigError("bootstrap: max_iterations must be >= 1");
  if (cfg.paraphrase_k < 0) throw ConfigError("bootstrap: paraphrase_k must be >= 0");
  if (cfg.gold_format_retries < 0) throw ConfigError("bootstrap: gold_format_retries must be >= 0");
}

BootstrapEngine::BootstrapEngine(gateway::Gateway& gw, const PromptLibrary& prompts,
                                 const FlagTaxonomy& taxonomy, BootstrapConfig config)
    : gw_(gw), prompts_(prompts), taxonomy_(taxonomy), config_(std::move(config)) {
  validate(config_);
}

std::string BootstrapEngine::annotation_json(const HumanAnnotation* annotation) {
  if (!annotation || annotation->flags.empty()) return "{}";
  Json flags = Json::array();
  for (const auto& f : annotation->flags) {
    Json boxes = Json::array();
    for (const auto& b : f.bboxes) boxes.push_back(box_json(b));
    flags.push_back({{"flag", f.flag_name}, {"bboxes", boxes}});
  }
  return Json{{"flags", flags}}.dump();
}

std::string BootstrapEngine::gold_flags_json(const HumanAnnotation* annotation) {
  Json flags = Json::array();
  if (annotation) {
    for (const auto& f : annotation->flags) {
      Json boxes = Json::array();
      for (const auto& b : f.bboxes) boxes.push_back(box_json(b));
      flags.push_back({{"flag", f.flag_name}, {"bboxes", boxes}});
    }
  }
  return flags.dump();
}

std::string BootstrapEngine::label_text(const Sample& sample) {
  std::string out(to_string(sample.label));
  if (sample.label == Label::edited) {
    Json regions = Json::array();
    for (const auto& b : sample.edited_regions) regions.push_back(box_json(b));
    out += " " + regions.dump();
  }
  return out;
}

std::string BootstrapEngine::chat(const std::string& prompt, const std::string& image,
                                  const std::string& model, double temperature,
                                  const std::string& purpose) const {
  auto req = gateway::user_request(prompt, image.empty() ? std::nullopt : std::optional<std::string>(image),
                                   model, temperature, purpose);
  req.max_tokens = config_.max_tokens;
  req.request_seed = static_cast<std::int64_t>(config_.seed);
  return gw_.chat(req);
}

ReasoningResponse BootstrapEngine::make_gold(const Sample& sample,
                                             const HumanAnnotation* annotation) const {
  std::string prompt;
  if (sample.label == Label::real) {
    if (annotation && !annotation->flags.empty()) {
      throw ValidationError("annotation", "real samples carry no annotation");
    }
    prompt = prompts_.get(TemplateName::gold_real).render({{"image", sample.image_ref}});
  } else {
    if (!annotation) throw ValidationError("annotation", "fake and edited samples need an annotation");
    std::string regions;
    if (sample.label == Label::edited) {
      Json r = Json::array();
      for (const auto& b : sample.edited_regions) r.push_back(box_json(b));
      regions = "edited_regions: " + r.dump();
    }
    prompt = prompts_.get(TemplateName::gold_fake)
                 .render({{"image", sample.image_ref},
                          {"flags_json", gold_flags_json(annotation)},
                          {"edited_regions", regions}});
  }
  std::string request = prompt;
  std::string last;
  for (int attempt = 0; attempt <= config_.gold_format_retries; ++attempt) {
    last = chat(request, sample.image_ref, config_.models.gen, config_.gen_temperature, "gold");
    if (auto parsed = parse_gold_reply(last)) {
      const bool consistent = sample.label == Label::real ? parsed->answer == Label::real
                                                          : parsed->answer != Label::real;
      if (consistent) {
        ReasoningResponse gold;
        gold.text = parsed->canonical;
        gold.intended_rating = kMaxRating;
        gold.origin = Origin::gold;
        return gold;
      }
    }
    request = prompt +
              "\n\nFORMAT NOTE: the previous reply was rejected. Reply with exactly two lines: "
              "<think>...</think> on the first and <answer>" +
              std::string(sample.label == Label::real ? "Real" : "Fake") + "</answer> on the second.";
  }
  throw FormatError("gold reply violates the two-line tag format after " +
                    std::to_string(config_.gold_format_retries) + " re-asks");
}

std::map<int, ReasoningResponse> BootstrapEngine::generate_candidates(
    const Sample& sample, const HumanAnnotation* annotation, const ReasoningResponse& gold,
    std::map<int, std::string>& errors) const {
  std::vector<int> levels;
  for (int r = config_.levels - 1; r >= 1; --r) levels.push_back(r);
  const std::string prompt =
      prompts_.get(TemplateName::p_gen)
          .render({{"flags", taxonomy_.describe()},
                   {"image", sample.image_ref},
                   {"label", label_text(sample)},
                   {"human_annotation", annotation_json(annotation)},
                   {"gold_standard_response", gold.text},
                   {"output_format", rating_keys_format(levels, "rating_", "<response text>")}});

  std::map<int, std::string> texts;
  auto absorb = [&](const std::string& reply) {
    if (auto obj = extract_json_object(reply)) {
      for (auto& [r, text] : parse_rating_map(*obj)) {
        if (r >= 1 && r < config_.levels && !texts.count(r)) texts.emplace(r, std::move(text));
      }
    }
  };
  auto missing = [&] {
    std::vector<int> out;
    for (int r : levels) {
      if (!texts.count(r)) out.push_back(r);
    }
    return out;
  };
  std::string failure;
  try {
    absorb(chat(prompt, sample.image_ref, config_.models.gen, config_.gen_temperature, "p_gen"));
    if (const auto gaps = missing(); !gaps.empty()) {
      absorb(chat(prompt + "\n\nFORMAT NOTE: the previous reply lacked " + join_levels(gaps, "rating_") +
                      ". Return every key.",
                  sample.image_ref, config_.models.gen, config_.gen_temperature, "p_gen"));
    }
  } catch (const TransportError& e) {
    failure = std::string("generation call failed: ") + e.what();
  }
  std::map<int, ReasoningResponse> out;
  for (int r : levels) {
    auto it = texts.find(r);
    if (it == texts.end()) {
      errors[r] = failure.empty() ? "format error: reply lacks rating_" + std::to_string(r) : failure;
      continue;
    }
    ReasoningResponse c;
    c.text = it->second;
    c.intended_rating = r;
    c.origin = Origin::generated;
    out.emplace(r, std::move(c));
  }
  return out;
}

EvalOutcome BootstrapEngine::evaluate_candidate(const Sample& sample, const HumanAnnotation* annotation,
                                                const ReasoningResponse& gold,
                                                const ReasoningResponse& candidate,
                                                int iteration) const {
  const std::string prompt =
      prompts_.get(TemplateName::p_eval)
          .render({{"flags", taxonomy_.describe()},
                   {"label", label_text(sample)},
                   {"human_annotation", annotation_json(annotation)},
                   {"gold_standard_response", gold.text},
                   {"generated_responses", Json{{"candidate_1", candidate.text}}.dump()},
                   {"output_format", R"({"candidate_1": {"rating": <1-4>, "rationale": "<concise explanation>"}})"}});
  EvalOutcome out;
  std::string reply;
  try {
    reply = chat(prompt, sample.image_ref, config_.models.eval, config_.eval_temperature, "p_eval");
  } catch (const TransportError& e) {
    out.error = std::string("evaluation call failed: ") + e.what();
    return out;
  }
  const auto parsed = parse_eval_reply(reply);
  if (!parsed) {
    out.error = "evaluation error: unparseable rating";
    return out;
  }
  out.trace = make_trace(candidate.intended_rating, parsed->rating, parsed->rationale, iteration);
  out.rationale_missing = parsed->rationale_missing;
  return out;
}

std::map<int, ReasoningResponse> BootstrapEngine::refine(const Sample& sample,
                                                         const HumanAnnotation* annotation,
                                                         const ReasoningResponse& gold,
                                                         const std::map<int, PendingLevel>& pending,
                                                         std::map<int, std::string>& errors) const {
  std::vector<int> levels;
  Json feedback = Json::object();
  for (auto it = pending.rbegin(); it != pending.rend(); ++it) {
    const auto& [r, p] = *it;
    if (p.candidate.iteration >= config_.max_iterations) continue;
    levels.push_back(r);
    feedback["rating " + std::to_string(r)] = {
        {"response", p.candidate.text},
        {"intended_rating", r},
        {"eval_rating", p.predicted_rating > 0 ? Json(p.predicted_rating) : Json(nullptr)},
        {"feedback", p.feedback}};
  }
  std::map<int, ReasoningResponse> out;
  if (levels.empty()) return out;
  const std::string prompt =
      prompts_.get(TemplateName::p_ref)
          .render({{"flags", taxonomy_.describe()},
                   {"image", sample.image_ref},
                   {"label", label_text(sample)},
                   {"human_annotation", annotation_json(annotation)},
                   {"gold_standard_response", gold.text},
                   {"feedback_data", feedback.dump()},
                   {"output_format", rating_keys_format(levels, "rating ", "<revised response text>")}});
  std::map<int, std::string> texts;
  auto absorb = [&](const std::string& reply) {
    if (auto obj = extract_json_object(reply)) {
      for (auto& [r, text] : parse_rating_map(*obj)) {
        if (pending.count(r) && !texts.count(r)) texts.emplace(r, std::move(text));
      }
    }
  };
  std::string failure;
  try {
    absorb(chat(prompt, sample.image_ref, config_.models.gen, config_.gen_temperature, "p_ref"));
    std::vector<int> gaps;
    for (int r : levels) {
      if (!texts.count(r)) gaps.push_back(r);
    }
    if (!gaps.empty()) {
      absorb(chat(prompt + "\n\nFORMAT NOTE: the previous reply lacked " + join_levels(gaps, "rating ") +
                      ". Return every requested key.",
                  sample.image_ref, config_.models.gen, config_.gen_temperature, "p_ref"));
    }
  } catch (const TransportError& e) {
    failure = std::string("refinement call failed: ") + e.what();
  }
  for (int r : levels) {
    auto it = texts.find(r);
    if (it == texts.end()) {
      errors[r] = failure.empty() ? "format error: refinement reply lacks rating " + std::to_string(r) : failure;
      continue;
    }
    ReasoningResponse c = pending.at(r).candidate;
    c.text = it->second;
    c.origin = Origin::refined;
    c.iteration += 1;
    out.emplace(r, std::move(c));
  }
  return out;
}

std::vector<ReasoningResponse> BootstrapEngine::paraphrase(const Sample& sample,
                                                           const HumanAnnotation* annotation,
                                                           const ReasoningResponse& response, int k,
                                                           std::vector<std::string>& notes) const {
  std::vector<ReasoningResponse> out;
  if (k <= 0) return out;
  Json fmt = Json::object();
  for (int i = 1; i <= k; ++i) fmt["paraphrase_" + std::to_string(i)] = "<paraphrased text>";
  const std::string prompt = prompts_.get(TemplateName::paraphrase)
                                 .render({{"instruction", config_.paraphrase_instruction},
                                          {"label", label_text(sample)},
                                          {"human_annotation", annotation_json(annotation)},
                                          {"response_text", response.text},
                                          {"count", std::to_string(k)},
                                          {"output_format", fmt.dump()}});
  const auto signature = tag_signature(response.text);
  const std::string where = "rating " + std::to_string(response.intended_rating) + " paraphrase ";
  std::map<int, std::string> good;
  auto absorb = [&](const std::string& reply) {
    const auto obj = extract_json_object(reply);
    if (!obj) return;
    for (auto& [i, text] : parse_paraphrases(*obj)) {
      if (i <= k && !good.count(i) && tag_signature(text) == signature) good.emplace(i, std::move(text));
    }
  };
  try {
    absorb(chat(prompt, "", config_.models.para, config_.para_temperature, "paraphrase"));
    if (static_cast<int>(good.size()) < k) {
      absorb(chat(prompt + "\n\nFORMAT NOTE: keep every XML-style tag of the original and return all " +
                      std::to_string(k) + " keys.",
                  "", config_.models.para, config_.para_temperature, "paraphrase"));
    }
  } catch (const TransportError& e) {
    notes.push_back(where + "call failed: " + e.what());
  }
  const std::string original = metrics::trim(response.text);
  for (int i = 1; i <= k; ++i) {
    auto it = good.find(i);
    if (it == good.end()) {
      const std::string msg = where + std::to_string(i) + " skipped: missing or tag structure changed";
      log_warning(sample.id + ": " + msg);
      notes.push_back(msg);
      continue;
    }
    ReasoningResponse v = response;
    v.text = it->second;
    v.variant_index = i;
    v.origin = Origin::paraphrase;
    v.low_diversity = it->second == original;
    out.push_back(std::move(v));
  }
  return out;
}

BootstrapRecord BootstrapEngine::bootstrap_sample(const Sample& sample,
                                                  const HumanAnnotation* annotation) const {
  BootstrapRecord record;
  record.sample_id = sample.id;
  record.image_ref = sample.image_ref;
  record.label = sample.label;
  Json levels = Json::object();
  for (int r = 1; r < config_.levels; ++r) {
    levels[std::to_string(r)] = {{"status", "pending"}, {"eval_calls", 0}, {"refinements", 0}};
  }
  auto level = [&](int r) -> Json& { return levels[std::to_string(r)]; };
  auto finish = [&] {
    record.complete = record.gold.has_value() &&
                      static_cast<int>(record.accepted.size()) == config_.levels - 1;
    record.extra["levels"] = levels;
    return record;
  };

  try {
    record.gold = make_gold(sample, annotation);
  } catch (const Error& e) {
    record.notes.push_back(std::string("gold: ") + e.what());
    for (auto& [k, v] : levels.items()) v["status"] = "skipped";
    return finish();
  }
  record.gold_variants = paraphrase(sample, annotation, *record.gold, config_.paraphrase_k, record.notes);

  std::map<int, std::string> errors;
  auto current = generate_candidates(sample, annotation, *record.gold, errors);
  for (const auto& [r, msg] : errors) {
    record.notes.push_back("level " + std::to_string(r) + ": " + msg);
    level(r)["status"] = "error";
  }

  for (int t = 0; t <= config_.max_iterations && !current.empty(); ++t) {
    std::map<int, PendingLevel> mismatched;
    for (auto& [r, cand] : current) {
      level(r)["eval_calls"] = level(r)["eval_calls"].get<int>() + 1;
      const EvalOutcome outcome = evaluate_candidate(sample, annotation, *record.gold, cand, t);
      if (!outcome.trace) {
        record.notes.push_back("level " + std::to_string(r) + " iteration " + std::to_string(t) + ": " +
                               outcome.error);
        mismatched[r] = {cand, 0, kGenericFeedback};
        continue;
      }
      record.diagnostics.push_back(*outcome.trace);
      if (outcome.rationale_missing) {
        record.notes.push_back("level " + std::to_string(r) + " iteration " + std::to_string(t) +
                               ": evaluator gave no rationale");
      }
      if (outcome.trace->deviation <= config_.alpha) {
        record.accepted[r] = {cand};
        level(r)["status"] = "accepted";
        level(r)["accepted_iteration"] = t;
      } else {
        mismatched[r] = {cand, outcome.trace->predicted_rating, outcome.trace->feedback};
      }
    }
    if (mismatched.empty()) break;
    if (t == config_.max_iterations) {
      for (const auto& [r, p] : mismatched) {
        record.notes.push_back("level " + std::to_string(r) + ": dropped after " +
                               std::to_string(config_.max_iterations) + " refinements");
        level(r)["status"] = "dropped";
      }
      break;
    }
    std::map<int, std::string> refine_errors;
    current = refine(sample, annotation, *record.gold, mismatched, refine_errors);
    for (const auto& [r, p] : mismatched) level(r)["refinements"] = level(r)["refinements"].get<int>() + 1;
    for (const auto& [r, msg] : refine_errors) {
      record.notes.push_back("level " + std::to_string(r) + ": " + msg);
      level(r)["status"] = "error";
    }
  }

  for (auto& [r, list] : record.accepted) {
    auto variants = paraphrase(sample, annotation, list.front(), config_.paraphrase_k, record.notes);
    list.insert(list.end(), std::make_move_iterator(variants.begin()),
                std::make_move_iterator(variants.end()));
  }
  return finish();
}

std::vector<BootstrapRecord> BootstrapEngine::bootstrap_all(
    std::span<const Sample> samples, const std::map<std::string, HumanAnnotation>& annotations,
    int workers) const {
  std::vector<BootstrapRecord> out(samples.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      auto it = annotations.find(samples[i].id);
      out[i] = bootstrap_sample(samples[i], it == annotations.end() ? nullptr : &it->second);
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(samples.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  std::sort(out.begin(), out.end(),
            [](const BootstrapRecord& a, const BootstrapRecord& b) { return a.sample_id < b.sample_id; });
  return out;
}

std::size_t variant_count(const BootstrapRecord& record) {
  std::size_t n = record.gold ? 1 + record.gold_variants.size() : 0;
  for (const auto& [r, list] : record.accepted) n += list.size();
  return n;
}

}  // namespace jf::bootstrap
