#include "jf/core/types.hpp"

#include <array>
#include <cstdlib>
#include <set>

#include "jf/core/error.hpp"

namespace jf {
namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  throw ValidationError(what, "unknown value \"" + std::string(s) + "\"");
}

constexpr std::array<std::string_view, 3> kLabels{"real", "fake", "edited"};
constexpr std::array<std::string_view, 4> kSources{"t2i", "ti2i", "real", "external"};
constexpr std::array<std::string_view, 4> kOrigins{"gold", "generated", "refined", "paraphrase"};
constexpr std::array<std::string_view, 2> kChoices{"A", "B"};
constexpr std::array<std::string_view, 10> kTemplates{
    "gold_fake", "gold_real",      "p_gen",         "p_eval", "p_ref",
    "paraphrase", "pointwise_eval", "pairwise_eval", "detect", "reason"};

std::string join(const std::string& path, const std::string& field) {
  return path.empty() ? field : path + "." + field;
}

}  // namespace

std::string_view to_string(Label v) { return kLabels[static_cast<std::size_t>(v)]; }
std::string_view to_string(Source v) { return kSources[static_cast<std::size_t>(v)]; }
std::string_view to_string(Origin v) { return kOrigins[static_cast<std::size_t>(v)]; }
std::string_view to_string(Choice v) { return kChoices[static_cast<std::size_t>(v)]; }
std::string_view to_string(TemplateName v) { return kTemplates[static_cast<std::size_t>(v)]; }

Label parse_label(std::string_view s) { return parse_enum<Label>(s, kLabels, "label"); }
Source parse_source(std::string_view s) { return parse_enum<Source>(s, kSources, "source"); }
Origin parse_origin(std::string_view s) { return parse_enum<Origin>(s, kOrigins, "origin"); }
Choice parse_choice(std::string_view s) { return parse_enum<Choice>(s, kChoices, "answer"); }
TemplateName parse_template_name(std::string_view s) {
  return parse_enum<TemplateName>(s, kTemplates, "template");
}

EvalTrace make_trace(int candidate_rating, int predicted_rating, std::string feedback,
                     int iteration) {
  EvalTrace t;
  t.candidate_rating = candidate_rating;
  t.predicted_rating = predicted_rating;
  t.deviation = std::abs(candidate_rating - predicted_rating);
  t.feedback = std::move(feedback);
  t.iteration = iteration;
  return t;
}

void validate(const BBox& box, const std::string& path) {
  auto in_range = [](int v) { return v >= kMinCoord && v <= kMaxCoord; };
  if (!in_range(box.x1)) throw ValidationError(join(path, "x1"), "x1 outside [1,1000]");
  if (!in_range(box.y1)) throw ValidationError(join(path, "y1"), "y1 outside [1,1000]");
  if (!in_range(box.x2)) throw ValidationError(join(path, "x2"), "x2 outside [1,1000]");
  if (!in_range(box.y2)) throw ValidationError(join(path, "y2"), "y2 outside [1,1000]");
  if (box.x1 >= box.x2) throw ValidationError(join(path, "x1"), "x1<x2 violated");
  if (box.y1 >= box.y2) throw ValidationError(join(path, "y1"), "y1<y2 violated");
}

void validate(const Sample& sample) {
  if (sample.id.empty()) throw ValidationError("id", "empty id");
  if (sample.label == Label::edited && sample.edited_regions.empty()) {
    throw ValidationError("edited_regions", "edited requires regions");
  }
  if (sample.label != Label::edited && !sample.edited_regions.empty()) {
    throw ValidationError("edited_regions", "regions only allowed for edited samples");
  }
  for (std::size_t i = 0; i < sample.edited_regions.size(); ++i) {
    validate(sample.edited_regions[i], "edited_regions[" + std::to_string(i) + "]");
  }
}

void validate(const HumanAnnotation& annotation) {
  if (annotation.sample_id.empty()) throw ValidationError("sample_id", "empty sample_id");
  if (annotation.annotator_id.empty()) {
    throw ValidationError("annotator_id", "empty annotator_id");
  }
  for (std::size_t i = 0; i < annotation.flags.size(); ++i) {
    const auto& flag = annotation.flags[i];
    const std::string base = "flags[" + std::to_string(i) + "]";
    if (flag.flag_name.empty()) throw ValidationError(base + ".flag_name", "empty flag name");
    for (std::size_t b = 0; b < flag.bboxes.size(); ++b) {
      validate(flag.bboxes[b], base + ".bboxes[" + std::to_string(b) + "]");
    }
  }
}

void validate(const ReasoningResponse& r, const std::string& path) {
  if (r.intended_rating < kMinRating || r.intended_rating > kMaxRating) {
    throw ValidationError(join(path, "intended_rating"), "rating outside 1..5");
  }
  if (r.intended_rating == kMaxRating && r.origin != Origin::gold &&
      r.origin != Origin::paraphrase) {
    throw ValidationError(join(path, "origin"), "rating 5 requires gold or paraphrase origin");
  }
  if (r.variant_index < 0) throw ValidationError(join(path, "variant_index"), "negative");
  if (r.iteration < 0) throw ValidationError(join(path, "iteration"), "negative");
}

void validate(const EvalTrace& t, const std::string& path) {
  if (t.deviation != std::abs(t.candidate_rating - t.predicted_rating)) {
    throw ValidationError(join(path, "deviation"), "deviation must equal |r - r_hat|");
  }
  if (t.iteration < 0) throw ValidationError(join(path, "iteration"), "negative");
}

void validate(const BootstrapRecord& record) {
  if (record.sample_id.empty()) throw ValidationError("sample_id", "empty sample_id");
  if (record.gold) {
    validate(*record.gold, "gold");
    if (record.gold->intended_rating != kMaxRating) {
      throw ValidationError("gold.intended_rating", "gold must be rated 5");
    }
  }
  for (std::size_t i = 0; i < record.gold_variants.size(); ++i) {
    validate(record.gold_variants[i], "gold_variants[" + std::to_string(i) + "]");
  }
  for (const auto& [rating, list] : record.accepted) {
    const std::string base = "accepted." + std::to_string(rating);
    if (rating < kMinRating || rating >= kMaxRating) {
      throw ValidationError(base, "accepted ratings must lie in 1..4");
    }
    if (list.empty()) throw ValidationError(base, "accepted level without responses");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = base + "[" + std::to_string(i) + "]";
      validate(list[i], p);
      if (list[i].intended_rating != rating) {
        throw ValidationError(p + ".intended_rating", "does not match its level");
      }
    }
  }
  for (std::size_t i = 0; i < record.diagnostics.size(); ++i) {
    validate(record.diagnostics[i], "diagnostics[" + std::to_string(i) + "]");
  }
  if (record.complete && !record.gold) {
    throw ValidationError("complete", "complete record requires gold");
  }
  if (record.complete) {
    // Levels 1..N-1 with no gaps; N = 5 gives exactly 1..4.
    int expected = kMinRating;
    for (const auto& [rating, list] : record.accepted) {
      if (rating != expected++) throw ValidationError("accepted", "complete record has a gap at level " + std::to_string(expected - 1));
    }
    if (record.accepted.empty()) throw ValidationError("accepted", "complete record without levels");
  }
}

}  // namespace jf
