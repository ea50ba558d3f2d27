#include "jf/metrics/classification.hpp"

#include <stdexcept>

namespace jf::metrics {
namespace {

std::size_t idx(Label l) { return static_cast<std::size_t>(l); }

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

MetricValue pairwise_accuracy(std::span<const std::optional<Choice>> choices,
                              std::span<const Choice> answers) {
  if (choices.size() != answers.size()) {
    throw std::invalid_argument("pairwise_accuracy: length mismatch");
  }
  MetricValue out{"pairwise_accuracy", std::nullopt, 0, 0};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (!choices[i]) {
      ++out.skipped;
      continue;
    }
    ++out.support;
    if (*choices[i] == answers[i]) ++correct;
  }
  if (!choices.empty()) {
    out.value = static_cast<double>(correct) / static_cast<double>(choices.size());
  }
  return out;
}

void ConfusionMatrix::add(Label truth, std::optional<Label> predicted) {
  if (predicted) {
    ++counts_[idx(truth)][idx(*predicted)];
  } else {
    ++unparsed_[idx(truth)];
  }
}

std::size_t ConfusionMatrix::at(Label truth, Label predicted) const {
  return counts_[idx(truth)][idx(predicted)];
}

std::size_t ConfusionMatrix::unparsed(Label truth) const { return unparsed_[idx(truth)]; }

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    t += unparsed_[r];
    for (std::size_t c = 0; c < 3; ++c) t += counts_[r][c];
  }
  return t;
}

DetectionScores detection_scores(const ConfusionMatrix& m) {
  using L = Label;
  // Fold edited into fake on both axes.
  const double rr = static_cast<double>(m.at(L::real, L::real));
  const double rf = static_cast<double>(m.at(L::real, L::fake) + m.at(L::real, L::edited));
  const double ru = static_cast<double>(m.unparsed(L::real));
  const double fr = static_cast<double>(m.at(L::fake, L::real) + m.at(L::edited, L::real));
  const double ff = static_cast<double>(m.at(L::fake, L::fake) + m.at(L::fake, L::edited) +
                                        m.at(L::edited, L::fake) + m.at(L::edited, L::edited));
  const double fu = static_cast<double>(m.unparsed(L::fake) + m.unparsed(L::edited));

  DetectionScores s;
  const double real_total = rr + rf + ru;
  const double fake_total = fr + ff + fu;
  s.real_acc = ratio(rr, real_total);
  s.fake_acc = ratio(ff, fake_total);
  s.real_f1 = f1_of(ratio(rr, rr + fr), s.real_acc);
  s.fake_f1 = f1_of(ratio(ff, ff + rf), s.fake_acc);
  s.overall_acc = ratio(rr + ff, real_total + fake_total);
  s.overall_f1 = (s.real_f1 + s.fake_f1) / 2.0;
  return s;
}

ClassPrf class_scores(const ConfusionMatrix& m, Label label) {
  double tp = static_cast<double>(m.at(label, label));
  double predicted = 0.0, actual = static_cast<double>(m.unparsed(label));
  for (auto other : {Label::real, Label::fake, Label::edited}) {
    predicted += static_cast<double>(m.at(other, label));
    actual += static_cast<double>(m.at(label, other));
  }
  ClassPrf out;
  out.precision = ratio(tp, predicted);
  out.recall = ratio(tp, actual);
  out.f1 = f1_of(out.precision, out.recall);
  return out;
}

}  // namespace jf::metrics
