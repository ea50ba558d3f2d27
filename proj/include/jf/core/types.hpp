#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace jf {

// Insertion-ordered so that unknown fields re-emit in the order they were read.
using Json = nlohmann::ordered_json;

using Timestamp = std::chrono::sys_seconds;

enum class Label { real, fake, edited };
enum class Source { t2i, ti2i, real, external };
enum class Origin { gold, generated, refined, paraphrase };
enum class Choice { A, B };

std::string_view to_string(Label v);
std::string_view to_string(Source v);
std::string_view to_string(Origin v);
std::string_view to_string(Choice v);
Label parse_label(std::string_view s);
Source parse_source(std::string_view s);
Origin parse_origin(std::string_view s);
Choice parse_choice(std::string_view s);

inline constexpr int kMinCoord = 1;
inline constexpr int kMaxCoord = 1000;
inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 5;

// Box in normalized [1,1000] coordinates, top-left origin, y downward.
struct BBox {
  int x1 = kMinCoord;
  int y1 = kMinCoord;
  int x2 = kMaxCoord;
  int y2 = kMaxCoord;
  std::string ref_exp;
  Json extra = Json::object();

  bool operator==(const BBox&) const = default;
};

struct Sample {
  std::string id;
  std::string image_ref;
  Label label = Label::real;
  std::vector<BBox> edited_regions;
  Source source = Source::real;
  std::int64_t seed_tag = 0;
  Json extra = Json::object();

  bool operator==(const Sample&) const = default;
};

struct FlagEntry {
  std::string flag_name;
  std::vector<BBox> bboxes;
  Json extra = Json::object();

  bool operator==(const FlagEntry&) const = default;
};

struct HumanAnnotation {
  std::string sample_id;
  std::string annotator_id;
  std::vector<FlagEntry> flags;
  Timestamp created_at{};
  Json extra = Json::object();

  bool operator==(const HumanAnnotation&) const = default;
};

struct ReasoningResponse {
  std::string text;
  int intended_rating = kMaxRating;
  int variant_index = 0;
  Origin origin = Origin::gold;
  int iteration = 0;
  // Set on paraphrases whose text equals the original.
  bool low_diversity = false;
  Json extra = Json::object();

  bool operator==(const ReasoningResponse&) const = default;
};

struct EvalTrace {
  int candidate_rating = 0;
  int predicted_rating = 0;
  int deviation = 0;
  std::string feedback;
  int iteration = 0;
  Json extra = Json::object();

  bool operator==(const EvalTrace&) const = default;
};

EvalTrace make_trace(int candidate_rating, int predicted_rating, std::string feedback,
                     int iteration);

struct BootstrapRecord {
  std::string sample_id;
  std::string image_ref;
  Label label = Label::real;
  std::optional<ReasoningResponse> gold;
  // Paraphrases of the gold response, variant_index 1..k.
  std::vector<ReasoningResponse> gold_variants;
  // rating -> [accepted candidate (variant 0), paraphrases 1..k]
  std::map<int, std::vector<ReasoningResponse>> accepted;
  std::vector<EvalTrace> diagnostics;
  std::vector<std::string> notes;
  bool complete = false;
  Json extra = Json::object();

  bool operator==(const BootstrapRecord&) const = default;
};

enum class TemplateName {
  gold_fake,
  gold_real,
  p_gen,
  p_eval,
  p_ref,
  paraphrase,
  pointwise_eval,
  pairwise_eval,
  detect,
  reason,
};

std::string_view to_string(TemplateName v);
TemplateName parse_template_name(std::string_view s);

// Throw ValidationError naming the offending field path.
void validate(const BBox& box, const std::string& path = "");
void validate(const Sample& sample);
void validate(const HumanAnnotation& annotation);
void validate(const ReasoningResponse& response, const std::string& path = "");
void validate(const EvalTrace& trace, const std::string& path = "");
void validate(const BootstrapRecord& record);

}  // namespace jf
