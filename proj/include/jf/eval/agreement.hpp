#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jf/core/types.hpp"

namespace jf::eval {

// One human judgment: a 1..5 rating ("pointwise"), "A"/"B" ("pairwise"), or
// any categorical value ("flags"), with the dataset's answer when known.
struct MetaJudgment {
  std::string item_id;
  std::string annotator_id;
  std::string kind;
  std::string value;
  std::optional<std::string> reference;

  bool operator==(const MetaJudgment&) const = default;
};

Json to_json(const MetaJudgment& v);
MetaJudgment meta_judgment_from_json(const Json& j);

struct PairAgreement {
  std::string a;
  std::string b;
  std::size_t overlap = 0;
  double raw_agreement = 0.0;
  std::optional<double> kappa;
  // Pairwise items with a reference answer.
  std::size_t both_correct = 0;
  std::size_t one_correct = 0;
  std::size_t both_wrong = 0;
  // Pointwise items.
  std::optional<double> mse;
  std::optional<double> pearson;
  std::optional<double> spearman;
};

struct AnnotatorScore {
  std::string annotator;
  std::size_t scored = 0;  // items with a reference
  std::optional<double> exact_match;
  std::optional<double> mse;
  std::optional<double> rmse;
};

struct AgreementReport {
  std::string kind;
  std::vector<std::string> annotators;
  std::vector<PairAgreement> pairs;
  std::vector<AnnotatorScore> per_annotator;
  std::optional<double> mean_raw_agreement;
  std::optional<double> mean_kappa;
  std::optional<double> mean_mse;  // mean of per-annotator MSE against the reference
  std::string status;              // "ok" or why nothing could be computed

  Json to_json() const;
  std::string to_markdown() const;
};

AgreementReport agreement_report(const std::vector<MetaJudgment>& judgments, const std::string& kind);

// Two annotators on both_correct + both_wrong + one_correct pairwise items.
// With even tallies each annotator picks A and B equally often and each is
// right on half of the disagreements.
std::vector<MetaJudgment> judgments_from_tallies(std::size_t both_correct, std::size_t both_wrong,
                                                 std::size_t one_correct);

// Items of `kind` judged by at least two annotators who all gave the same value.
std::vector<std::string> agreed_items(const std::vector<MetaJudgment>& judgments, const std::string& kind);

}  // namespace jf::eval
