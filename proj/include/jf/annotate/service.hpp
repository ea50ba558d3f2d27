#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "jf/assemble/assembler.hpp"
#include "jf/core/taxonomy.hpp"
#include "jf/core/types.hpp"
#include "jf/eval/agreement.hpp"

namespace jf::annotate {

enum class TaskKind { artifact_flags, pointwise_rating, pairwise_preference };
enum class TaskStatus { open, in_progress, done };

std::string_view to_string(TaskKind k);
std::string_view to_string(TaskStatus s);
TaskKind parse_task_kind(std::string_view s);

// Agreement kind for a task kind: "flags", "pointwise" or "pairwise".
std::string agreement_kind(TaskKind k);

// Stored submission lines of `kind` as judgments. Artifact submissions expand
// to one "1"/"0" judgment per taxonomy flag, keyed "<item>/<flag>".
std::vector<eval::MetaJudgment> submission_judgments(const std::vector<Json>& lines, TaskKind kind,
                                                     const FlagTaxonomy& taxonomy);

// One task as seen by one annotator.
struct AnnotationTask {
  std::string task_id;
  TaskKind kind = TaskKind::artifact_flags;
  Sample sample;
  std::vector<std::string> responses;  // one for pointwise, two (A, B) for pairwise
  std::string assigned_to;
  TaskStatus status = TaskStatus::open;
  // Served to every annotator (pilot or overlap set).
  bool shared = false;

  Json to_json() const;
};

// A submission was refused; `reason` is safe to show to the annotator.
class Rejected : public ValidationError {
 public:
  Rejected(std::string field, const std::string& reason, int http_status = 400)
      : ValidationError(std::move(field), reason), status_(http_status) {}
  int http_status() const noexcept { return status_; }

 private:
  int status_;
};

struct ServiceOptions {
  std::size_t pilot_count = 10;     // shared artifact_flags tasks
  std::size_t overlap_count = 100;  // shared tasks per meta kind
  std::function<Timestamp()> clock;
};

// Task queue plus append-only store: <store>/<kind>/<annotator>.jsonl holds
// submissions, <store>/assignments.jsonl holds hand-outs. Both are replayed on
// construction, so a restart keeps every acknowledged submission.
class AnnotationService {
 public:
  AnnotationService(std::filesystem::path store, FlagTaxonomy taxonomy, ServiceOptions options = {});

  // Task ids are derived from sample and item ids, so re-adding after a
  // restart yields the same tasks. Leading tasks become the shared set.
  void add_artifact_tasks(const std::vector<Sample>& samples);
  void add_pointwise_tasks(const std::vector<PointwiseItem>& items);
  void add_pairwise_tasks(const std::vector<PairwiseItem>& items);

  void register_annotator(const std::string& annotator_id);
  bool is_registered(const std::string& annotator_id) const;

  std::optional<AnnotationTask> next_task(const std::string& annotator_id, TaskKind kind);

  // Body: {"task_id", "annotator_id", and one of "annotation" | "rating" | "choice"}.
  // Returns the stored line. Throws Rejected.
  Json submit(const Json& body);

  eval::AgreementReport live_agreement(TaskKind kind) const;

  // Header line, then one submission per line, ordered by (task, annotator).
  // artifact_flags exports leave pilot tasks out.
  std::string export_kind(TaskKind kind, bool agreed_only = false) const;
  // Loads an export (header line optional) into an empty store.
  void import_lines(std::string_view text);

  const FlagTaxonomy& taxonomy() const noexcept { return taxonomy_; }
  std::optional<Sample> sample(const std::string& sample_id) const;
  std::size_t submission_count() const;

 private:
  struct TaskDef {
    std::string task_id;
    TaskKind kind;
    Sample sample;
    std::vector<std::string> responses;
    std::string item_id;
    std::optional<std::string> reference;
    bool shared = false;
  };
  void add_task(TaskDef def);
  void replay();
  void append(const std::filesystem::path& file, const Json& line);
  AnnotationTask view(const TaskDef& def, const std::string& annotator, TaskStatus status) const;
  std::vector<eval::MetaJudgment> judgments(TaskKind kind) const;
  const TaskDef* find_task(const std::string& task_id) const;

  std::filesystem::path store_;
  FlagTaxonomy taxonomy_;
  ServiceOptions options_;
  mutable std::shared_mutex mutex_;
  std::vector<TaskDef> tasks_;
  std::map<std::string, std::size_t> task_index_;
  std::map<TaskKind, std::size_t> shared_added_;
  std::set<std::string> annotators_;
  // task_id -> annotator for disjoint tasks; (task_id, annotator) in progress.
  std::map<std::string, std::string> owner_;
  std::set<std::pair<std::string, std::string>> in_progress_;
  std::map<std::string, std::map<std::string, Json>> done_;  // task_id -> annotator -> line
  std::map<std::string, Sample> samples_;
};

}  // namespace jf::annotate
