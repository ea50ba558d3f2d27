#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include "jf/core/types.hpp"
#include "jf/metrics/metric_value.hpp"

namespace jf::metrics {

// Fraction of choices equal to the answer key. Unparseable choices (nullopt)
// count as incorrect and are tallied in `skipped`; support counts parsed ones.
MetricValue pairwise_accuracy(std::span<const std::optional<Choice>> choices,
                              std::span<const Choice> answers);

// Rows are ground truth, columns predictions, over {real, fake, edited}.
// Unparseable predictions are tallied separately.
class ConfusionMatrix {
 public:
  void add(Label truth, std::optional<Label> predicted);

  std::size_t at(Label truth, Label predicted) const;
  std::size_t unparsed(Label truth) const;
  std::size_t total() const;

 private:
  std::array<std::array<std::size_t, 3>, 3> counts_{};
  std::array<std::size_t, 3> unparsed_{};
};

// Two-class view with edited folded into fake. Class accuracy is the fraction
// of that class's items predicted correctly (recall); overall F1 is the macro
// mean of the two class F1 scores. Percentages are not applied here.
struct DetectionScores {
  double real_acc = 0.0;
  double real_f1 = 0.0;
  double fake_acc = 0.0;
  double fake_f1 = 0.0;
  double overall_acc = 0.0;
  double overall_f1 = 0.0;
};

DetectionScores detection_scores(const ConfusionMatrix& confusion);

struct ClassPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Per-class precision/recall/F1 on the full three-way matrix.
ClassPrf class_scores(const ConfusionMatrix& confusion, Label label);

}  // namespace jf::metrics
