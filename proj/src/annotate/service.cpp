#include "jf/annotate/service.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include <unistd.h>

#include "jf/core/error.hpp"
#include "jf/core/log.hpp"
#include "jf/core/serialize.hpp"

namespace jf::annotate {
namespace {

constexpr std::array<std::string_view, 3> kKinds{"artifact_flags", "pointwise_rating", "pairwise_preference"};
constexpr std::array<std::string_view, 3> kStatuses{"open", "in_progress", "done"};

const char* body_field(TaskKind k) {
  switch (k) {
    case TaskKind::artifact_flags:
      return "annotation";
    case TaskKind::pointwise_rating:
      return "rating";
    case TaskKind::pairwise_preference:
      return "choice";
  }
  return "";
}

std::string string_field(const Json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw Rejected(key, std::string(key) + " must be a non-empty string");
  }
  return it->get<std::string>();
}

Sample item_sample(const std::string& id, const std::string& image_ref, Label label) {
  Sample s;
  s.id = id;
  s.image_ref = image_ref;
  s.label = label;
  return s;
}

}  // namespace

std::string_view to_string(TaskKind k) { return kKinds.at(static_cast<std::size_t>(k)); }
std::string_view to_string(TaskStatus s) { return kStatuses.at(static_cast<std::size_t>(s)); }

TaskKind parse_task_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKinds.size(); ++i) {
    if (kKinds[i] == s) return static_cast<TaskKind>(i);
  }
  throw Rejected("kind", "unknown task kind: " + std::string(s));
}

std::string agreement_kind(TaskKind k) {
  switch (k) {
    case TaskKind::pointwise_rating:
      return "pointwise";
    case TaskKind::pairwise_preference:
      return "pairwise";
    case TaskKind::artifact_flags:
      break;
  }
  return "flags";
}

std::vector<eval::MetaJudgment> submission_judgments(const std::vector<Json>& lines, TaskKind kind,
                                                     const FlagTaxonomy& taxonomy) {
  std::vector<eval::MetaJudgment> out;
  for (const auto& line : lines) {
    if (line.value("kind", "") != to_string(kind)) continue;
    const auto item = line.at("item_id").get<std::string>();
    const auto who = line.at("annotator_id").get<std::string>();
    std::optional<std::string> ref;
    if (line.contains("reference")) ref = line.at("reference").get<std::string>();
    if (kind == TaskKind::pointwise_rating) {
      out.push_back({item, who, "pointwise", std::to_string(line.at("rating").get<int>()), ref});
    } else if (kind == TaskKind::pairwise_preference) {
      out.push_back({item, who, "pairwise", line.at("choice").get<std::string>(), ref});
    } else {
      std::set<std::string> raised;
      for (const auto& f : line.at("annotation").at("flags")) raised.insert(f.at("flag_name").get<std::string>());
      for (const auto& f : taxonomy.flags()) {
        out.push_back({item + "/" + f.name, who, "flags", raised.count(f.name) ? "1" : "0", std::nullopt});
      }
    }
  }
  return out;
}

Json AnnotationTask::to_json() const {
  Json j{{"task_id", task_id},
         {"kind", to_string(kind)},
         {"sample", jf::to_json(sample)},
         {"responses", responses},
         {"assigned_to", assigned_to},
         {"status", to_string(status)},
         {"shared", shared}};
  return j;
}

AnnotationService::AnnotationService(std::filesystem::path store, FlagTaxonomy taxonomy, ServiceOptions options)
    : store_(std::move(store)), taxonomy_(std::move(taxonomy)), options_(std::move(options)) {
  if (!options_.clock) {
    options_.clock = [] { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); };
  }
  std::filesystem::create_directories(store_);
  replay();
}

void AnnotationService::replay() {
  auto each_line = [](const std::filesystem::path& p, auto&& fn) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        fn(Json::parse(line));
      } catch (const std::exception& e) {
        log_warning(p.string() + ":" + std::to_string(n) + ": skipped unreadable line");
      }
    }
  };
  each_line(store_ / "assignments.jsonl", [&](const Json& j) {
    const auto task = j.at("task_id").get<std::string>();
    const auto who = j.at("annotator_id").get<std::string>();
    annotators_.insert(who);
    if (!j.value("shared", false)) owner_[task] = who;
    in_progress_.insert({task, who});
  });
  each_line(store_ / "annotators.jsonl", [&](const Json& j) { annotators_.insert(j.at("annotator_id").get<std::string>()); });
  for (auto kind : kKinds) {
    const auto dir = store_ / std::string(kind);
    if (!std::filesystem::exists(dir)) continue;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      each_line(f, [&](const Json& j) {
        const auto task = j.at("task_id").get<std::string>();
        const auto who = j.at("annotator_id").get<std::string>();
        annotators_.insert(who);
        in_progress_.erase({task, who});
        done_[task][who] = j;
      });
    }
  }
}

void AnnotationService::append(const std::filesystem::path& file, const Json& line) {
  std::filesystem::create_directories(file.parent_path());
  const std::string text = line.dump() + "\n";
  std::FILE* f = std::fopen(file.c_str(), "ab");
  if (!f) throw Error("cannot open " + file.string());
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size() && std::fflush(f) == 0 &&
                  ::fsync(fileno(f)) == 0;
  std::fclose(f);
  if (!ok) throw Error("cannot append to " + file.string());
}

void AnnotationService::add_task(TaskDef def) {
  std::unique_lock lock(mutex_);
  if (task_index_.count(def.task_id)) return;
  const std::size_t limit = def.kind == TaskKind::artifact_flags ? options_.pilot_count : options_.overlap_count;
  auto& added = shared_added_[def.kind];
  def.shared = added < limit;
  if (def.shared) ++added;
  samples_.emplace(def.sample.id, def.sample);
  task_index_[def.task_id] = tasks_.size();
  tasks_.push_back(std::move(def));
}

void AnnotationService::add_artifact_tasks(const std::vector<Sample>& samples) {
  for (const auto& s : samples) add_task({"flags:" + s.id, TaskKind::artifact_flags, s, {}, s.id, std::nullopt});
}

void AnnotationService::add_pointwise_tasks(const std::vector<PointwiseItem>& items) {
  const auto ids = item_ids(items);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    add_task({"pointwise:" + ids[i], TaskKind::pointwise_rating, item_sample(it.sample_id, it.image_ref, it.label),
              {it.response_text}, ids[i], std::to_string(it.target_rating)});
  }
}

void AnnotationService::add_pairwise_tasks(const std::vector<PairwiseItem>& items) {
  const auto ids = item_ids(items);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    add_task({"pairwise:" + ids[i], TaskKind::pairwise_preference, item_sample(it.sample_id, it.image_ref, it.label),
              {it.response_a, it.response_b}, ids[i], std::string(to_string(it.answer))});
  }
}

void AnnotationService::register_annotator(const std::string& annotator_id) {
  if (annotator_id.empty()) throw Rejected("annotator_id", "annotator_id must be non-empty");
  std::unique_lock lock(mutex_);
  if (annotators_.count(annotator_id)) return;
  append(store_ / "annotators.jsonl", Json{{"annotator_id", annotator_id}});
  annotators_.insert(annotator_id);
}

bool AnnotationService::is_registered(const std::string& annotator_id) const {
  std::shared_lock lock(mutex_);
  return annotators_.count(annotator_id) > 0;
}

const AnnotationService::TaskDef* AnnotationService::find_task(const std::string& task_id) const {
  auto it = task_index_.find(task_id);
  return it == task_index_.end() ? nullptr : &tasks_[it->second];
}

AnnotationTask AnnotationService::view(const TaskDef& def, const std::string& annotator, TaskStatus status) const {
  return {def.task_id, def.kind, def.sample, def.responses, annotator, status, def.shared};
}

std::optional<AnnotationTask> AnnotationService::next_task(const std::string& annotator_id, TaskKind kind) {
  std::unique_lock lock(mutex_);
  if (!annotators_.count(annotator_id)) throw Rejected("annotator", "annotator not registered", 403);
  for (const auto& def : tasks_) {
    if (def.kind == kind && in_progress_.count({def.task_id, annotator_id})) {
      return view(def, annotator_id, TaskStatus::in_progress);
    }
  }
  auto done_by = [&](const TaskDef& def) {
    auto it = done_.find(def.task_id);
    return it != done_.end() && it->second.count(annotator_id);
  };
  const TaskDef* pick = nullptr;
  for (const auto& def : tasks_) {
    if (def.kind == kind && def.shared && !done_by(def)) {
      pick = &def;
      break;
    }
  }
  if (!pick) {
    for (const auto& def : tasks_) {
      if (def.kind == kind && !def.shared && !owner_.count(def.task_id) && !done_.count(def.task_id)) {
        pick = &def;
        break;
      }
    }
  }
  if (!pick) return std::nullopt;
  append(store_ / "assignments.jsonl", Json{{"task_id", pick->task_id},
                                            {"annotator_id", annotator_id},
                                            {"kind", to_string(kind)},
                                            {"shared", pick->shared}});
  if (!pick->shared) owner_[pick->task_id] = annotator_id;
  in_progress_.insert({pick->task_id, annotator_id});
  return view(*pick, annotator_id, TaskStatus::in_progress);
}

Json AnnotationService::submit(const Json& body) {
  if (!body.is_object()) throw Rejected("", "body must be a JSON object");
  const auto task_id = string_field(body, "task_id");
  const auto annotator = string_field(body, "annotator_id");
  std::unique_lock lock(mutex_);
  const TaskDef* def = find_task(task_id);
  if (!def) throw Rejected("task_id", "unknown task " + task_id, 404);
  if (!annotators_.count(annotator)) throw Rejected("annotator_id", "annotator not registered", 403);
  if (!in_progress_.count({task_id, annotator})) {
    if (done_.count(task_id) && done_.at(task_id).count(annotator)) {
      throw Rejected("task_id", "task already submitted by this annotator", 409);
    }
    if (auto it = owner_.find(task_id); it != owner_.end() && it->second != annotator) {
      throw Rejected("annotator_id", "task is assigned to another annotator", 403);
    }
    throw Rejected("task_id", "task is not in progress for this annotator", 409);
  }
  for (auto k : {TaskKind::artifact_flags, TaskKind::pointwise_rating, TaskKind::pairwise_preference}) {
    const bool present = body.contains(body_field(k));
    if (present != (k == def->kind)) {
      throw Rejected(body_field(k), std::string("a ") + std::string(to_string(def->kind)) + " task takes \"" +
                                        body_field(def->kind) + "\" only");
    }
  }
  for (const auto& [key, v] : body.items()) {
    if (key != "task_id" && key != "annotator_id" && key != body_field(def->kind)) {
      throw Rejected(key, "unexpected field " + key);
    }
  }

  Json line{{"task_id", task_id},
            {"annotator_id", annotator},
            {"kind", to_string(def->kind)},
            {"item_id", def->item_id},
            {"submitted_at", format_timestamp(options_.clock())}};
  const Json& value = body.at(body_field(def->kind));
  switch (def->kind) {
    case TaskKind::artifact_flags: {
      if (!value.is_object() || !value.contains("flags")) throw Rejected("annotation", "annotation needs flags");
      Json full = value;
      full["sample_id"] = def->sample.id;
      full["annotator_id"] = annotator;
      full["created_at"] = line["submitted_at"];
      HumanAnnotation a;
      try {
        a = from_json<HumanAnnotation>(full);
        validate(a);
      } catch (const ValidationError& e) {
        throw Rejected("annotation." + e.field(), e.what());
      }
      for (std::size_t i = 0; i < a.flags.size(); ++i) {
        if (!taxonomy_.contains(a.flags[i].flag_name)) {
          throw Rejected("annotation.flags[" + std::to_string(i) + "].flag_name",
                         "unknown flag " + a.flags[i].flag_name);
        }
      }
      if (def->sample.label == Label::real && !a.flags.empty()) {
        throw Rejected("annotation.flags", "real images take no flags");
      }
      line["annotation"] = to_json(a);
      break;
    }
    case TaskKind::pointwise_rating:
      if (!value.is_number_integer() || value.get<std::int64_t>() < kMinRating ||
          value.get<std::int64_t>() > kMaxRating) {
        throw Rejected("rating", "rating must be an integer in 1..5");
      }
      line["rating"] = value.get<int>();
      break;
    case TaskKind::pairwise_preference:
      if (!value.is_string() || (value != "A" && value != "B")) throw Rejected("choice", "choice must be A or B");
      line["choice"] = value;
      break;
  }
  if (def->reference) line["reference"] = *def->reference;
  append(store_ / std::string(to_string(def->kind)) / (annotator + ".jsonl"), line);
  in_progress_.erase({task_id, annotator});
  done_[task_id][annotator] = line;
  return line;
}

std::vector<eval::MetaJudgment> AnnotationService::judgments(TaskKind kind) const {
  std::vector<Json> lines;
  for (const auto& [task, by] : done_) {
    for (const auto& [who, line] : by) lines.push_back(line);
  }
  return submission_judgments(lines, kind, taxonomy_);
}

eval::AgreementReport AnnotationService::live_agreement(TaskKind kind) const {
  std::shared_lock lock(mutex_);
  return eval::agreement_report(judgments(kind), agreement_kind(kind));
}

std::string AnnotationService::export_kind(TaskKind kind, bool agreed_only) const {
  std::shared_lock lock(mutex_);
  std::set<std::string> keep;
  if (agreed_only) {
    auto js = judgments(kind);
    if (kind == TaskKind::artifact_flags) {
      // Agreement on an item means every flag matched.
      std::map<std::string, std::map<std::string, std::string>> sets;
      for (const auto& j : js) sets[j.item_id.substr(0, j.item_id.rfind('/'))][j.annotator_id] += j.value;
      js.clear();
      for (const auto& [item, by] : sets) {
        for (const auto& [who, v] : by) js.push_back({item, who, "flags", v, std::nullopt});
      }
    }
    for (auto& id : eval::agreed_items(js, js.empty() ? "" : js.front().kind)) keep.insert(id);
  }
  std::vector<const Json*> lines;
  std::size_t pilot = 0;
  for (const auto& [task, by] : done_) {
    const TaskDef* def = find_task(task);
    for (const auto& [who, line] : by) {
      if (line.at("kind") != to_string(kind)) continue;
      if (kind == TaskKind::artifact_flags && def && def->shared) {
        ++pilot;
        continue;
      }
      if (agreed_only && !keep.count(line.at("item_id").get<std::string>())) continue;
      lines.push_back(&line);
    }
  }
  std::ostringstream out;
  out << Json{{"export", {{"kind", to_string(kind)},
                          {"count", lines.size()},
                          {"pilot_excluded", pilot},
                          {"agreed_only", agreed_only}}}}
             .dump()
      << '\n';
  for (const auto* l : lines) out << l->dump() << '\n';
  return out.str();
}

void AnnotationService::import_lines(std::string_view text) {
  std::unique_lock lock(mutex_);
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error&) {
      throw ValidationError("line " + std::to_string(n), "malformed JSON");
    }
    if (j.contains("export")) continue;
    const auto task = j.at("task_id").get<std::string>();
    const auto who = j.at("annotator_id").get<std::string>();
    const auto kind = parse_task_kind(j.at("kind").get<std::string>());
    if (done_.count(task) && done_.at(task).count(who)) continue;
    append(store_ / std::string(to_string(kind)) / (who + ".jsonl"), j);
    annotators_.insert(who);
    done_[task][who] = j;
  }
}

std::optional<Sample> AnnotationService::sample(const std::string& sample_id) const {
  std::shared_lock lock(mutex_);
  if (auto it = samples_.find(sample_id); it != samples_.end()) return it->second;
  return std::nullopt;
}

std::size_t AnnotationService::submission_count() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [t, by] : done_) n += by.size();
  return n;
}

}  // namespace jf::annotate
