#include "jf/eval/agreement.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "jf/core/error.hpp"
#include "jf/eval/report.hpp"
#include "jf/metrics/statistics.hpp"

namespace jf::eval {
namespace {

using Table = std::map<std::string, std::map<std::string, const MetaJudgment*>>;  // annotator -> item -> judgment

int as_rating(const std::string& s) {
  try {
    std::size_t used = 0;
    const int r = std::stoi(s, &used);
    if (used == s.size() && r >= kMinRating && r <= kMaxRating) return r;
  } catch (const std::exception&) {
  }
  throw ValidationError("value", "pointwise value must be an integer in 1..5: " + s);
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

void check_value(const std::string& kind, const std::string& v) {
  if (kind == "pointwise") {
    as_rating(v);
  } else if (kind == "pairwise" && v != "A" && v != "B") {
    throw ValidationError("value", "pairwise value must be A or B: " + v);
  }
}

}  // namespace

Json to_json(const MetaJudgment& v) {
  Json j{{"item_id", v.item_id}, {"annotator_id", v.annotator_id}, {"kind", v.kind}, {"value", v.value}};
  if (v.reference) j["reference"] = *v.reference;
  return j;
}

MetaJudgment meta_judgment_from_json(const Json& j) {
  MetaJudgment v;
  try {
    v.item_id = j.at("item_id").get<std::string>();
    v.annotator_id = j.at("annotator_id").get<std::string>();
    v.kind = j.at("kind").get<std::string>();
    const auto& value = j.at("value");
    v.value = value.is_number_integer() ? std::to_string(value.get<int>()) : value.get<std::string>();
    if (j.contains("reference") && !j.at("reference").is_null()) {
      const auto& r = j.at("reference");
      v.reference = r.is_number_integer() ? std::to_string(r.get<int>()) : r.get<std::string>();
    }
  } catch (const Json::exception& e) {
    throw ValidationError("judgment", e.what());
  }
  if (v.kind != "pointwise" && v.kind != "pairwise" && v.kind != "flags") {
    throw ValidationError("kind", "unknown kind " + v.kind);
  }
  check_value(v.kind, v.value);
  if (v.reference) check_value(v.kind, *v.reference);
  return v;
}

AgreementReport agreement_report(const std::vector<MetaJudgment>& judgments, const std::string& kind) {
  AgreementReport out;
  out.kind = kind;
  Table table;
  for (const auto& j : judgments) {
    if (j.kind != kind) continue;
    check_value(kind, j.value);
    table[j.annotator_id][j.item_id] = &j;
  }
  for (const auto& [a, items] : table) out.annotators.push_back(a);
  const bool pointwise = kind == "pointwise";

  std::vector<double> mses;
  for (const auto& [a, items] : table) {
    AnnotatorScore s;
    s.annotator = a;
    std::vector<double> diffs;
    std::size_t exact = 0;
    for (const auto& [id, j] : items) {
      if (!j->reference) continue;
      ++s.scored;
      exact += j->value == *j->reference;
      if (pointwise) {
        const double d = as_rating(j->value) - as_rating(*j->reference);
        diffs.push_back(d * d);
      }
    }
    if (s.scored) s.exact_match = double(exact) / double(s.scored);
    if (pointwise && !diffs.empty()) {
      s.mse = mean_of(diffs);
      s.rmse = std::sqrt(*s.mse);
      mses.push_back(*s.mse);
    }
    out.per_annotator.push_back(s);
  }
  out.mean_mse = mean_of(mses);

  std::vector<double> raws, kappas;
  for (auto ia = table.begin(); ia != table.end(); ++ia) {
    for (auto ib = std::next(ia); ib != table.end(); ++ib) {
      PairAgreement p;
      p.a = ia->first;
      p.b = ib->first;
      std::vector<std::string> va, vb;
      std::vector<double> ra, rb;
      for (const auto& [id, ja] : ia->second) {
        auto it = ib->second.find(id);
        if (it == ib->second.end()) continue;
        const auto* jb = it->second;
        va.push_back(ja->value);
        vb.push_back(jb->value);
        if (pointwise) {
          ra.push_back(as_rating(ja->value));
          rb.push_back(as_rating(jb->value));
        } else if (kind == "pairwise" && ja->reference) {
          const int correct = (ja->value == *ja->reference) + (jb->value == *ja->reference);
          (correct == 2 ? p.both_correct : correct == 1 ? p.one_correct : p.both_wrong)++;
        }
      }
      p.overlap = va.size();
      if (p.overlap == 0) continue;
      p.raw_agreement = metrics::raw_agreement(va, vb);
      p.kappa = metrics::cohen_kappa(va, vb);
      if (pointwise) {
        p.mse = metrics::regression_errors(ra, rb).mse;
        if (p.overlap >= 2) {
          const auto c = metrics::correlations(ra, rb);
          p.pearson = c.pearson;
          p.spearman = c.spearman;
        }
      }
      raws.push_back(p.raw_agreement);
      if (p.kappa) kappas.push_back(*p.kappa);
      out.pairs.push_back(p);
    }
  }
  out.mean_raw_agreement = mean_of(raws);
  out.mean_kappa = mean_of(kappas);
  if (out.annotators.size() < 2) {
    out.status = "need at least two annotators";
  } else if (out.pairs.empty()) {
    out.status = "no overlapping items between annotators";
  } else {
    out.status = "ok";
  }
  return out;
}

Json AgreementReport::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json ps = Json::array();
  for (const auto& p : pairs) {
    Json j{{"a", p.a}, {"b", p.b}, {"overlap", p.overlap}, {"raw_agreement", p.raw_agreement},
           {"kappa", opt(p.kappa)}};
    if (kind == "pairwise") {
      j["both_correct"] = p.both_correct;
      j["one_correct"] = p.one_correct;
      j["both_wrong"] = p.both_wrong;
    } else {
      j["mse"] = opt(p.mse);
      j["pearson"] = opt(p.pearson);
      j["spearman"] = opt(p.spearman);
    }
    ps.push_back(j);
  }
  Json as = Json::array();
  for (const auto& s : per_annotator) {
    as.push_back({{"annotator", s.annotator},
                  {"scored", s.scored},
                  {"exact_match", opt(s.exact_match)},
                  {"mse", opt(s.mse)},
                  {"rmse", opt(s.rmse)}});
  }
  return Json{{"kind", kind},
              {"status", status},
              {"annotators", annotators},
              {"mean_raw_agreement", opt(mean_raw_agreement)},
              {"mean_kappa", opt(mean_kappa)},
              {"mean_mse", opt(mean_mse)},
              {"pairs", ps},
              {"per_annotator", as}};
}

std::string AgreementReport::to_markdown() const {
  std::ostringstream out;
  out << "## Agreement (" << kind << ")\n\nStatus: " << status << "\n\n";
  out << "| Raw agreement | Kappa | Mean MSE vs reference |\n|---|---|---|\n";
  out << "| " << format_value(mean_raw_agreement) << " | " << format_value(mean_kappa) << " | "
      << format_value(mean_mse) << " |\n";
  if (!pairs.empty()) {
    out << "\n| Annotators | Overlap | Raw | Kappa |";
    out << (kind == "pairwise" ? " Both correct | One correct | Both wrong |\n|---|---|---|---|---|---|---|\n"
                               : " MSE | Pearson | Spearman |\n|---|---|---|---|---|---|---|\n");
    for (const auto& p : pairs) {
      out << "| " << p.a << " / " << p.b << " | " << p.overlap << " | " << format_value(p.raw_agreement) << " | "
          << format_value(p.kappa) << " |";
      if (kind == "pairwise") {
        out << ' ' << p.both_correct << " | " << p.one_correct << " | " << p.both_wrong << " |\n";
      } else {
        out << ' ' << format_value(p.mse) << " | " << format_value(p.pearson) << " | " << format_value(p.spearman)
            << " |\n";
      }
    }
  }
  if (!per_annotator.empty()) {
    out << "\n| Annotator | Scored | Exact match | MSE | RMSE |\n|---|---|---|---|---|\n";
    for (const auto& s : per_annotator) {
      out << "| " << s.annotator << " | " << s.scored << " | " << format_value(s.exact_match) << " | "
          << format_value(s.mse) << " | " << format_value(s.rmse) << " |\n";
    }
  }
  return out.str();
}

std::vector<MetaJudgment> judgments_from_tallies(std::size_t both_correct, std::size_t both_wrong,
                                                 std::size_t one_correct) {
  std::vector<MetaJudgment> out;
  std::size_t n = 0;
  auto add = [&](const std::string& ref, const std::string& a, const std::string& b) {
    const std::string id = "item" + std::to_string(n++);
    out.push_back({id, "annotator_1", "pairwise", a, ref});
    out.push_back({id, "annotator_2", "pairwise", b, ref});
  };
  auto other = [](const std::string& v) { return std::string(v == "A" ? "B" : "A"); };
  for (std::size_t i = 0; i < both_correct; ++i) {
    const std::string ref = i % 2 ? "B" : "A";
    add(ref, ref, ref);
  }
  for (std::size_t i = 0; i < both_wrong; ++i) {
    const std::string ref = i % 2 ? "B" : "A";
    add(ref, other(ref), other(ref));
  }
  // Annotator 1 alternates A/B and is right on the first half.
  for (std::size_t i = 0; i < one_correct; ++i) {
    const std::string v = i % 2 ? "B" : "A";
    add(i < one_correct / 2 ? v : other(v), v, other(v));
  }
  return out;
}

std::vector<std::string> agreed_items(const std::vector<MetaJudgment>& judgments, const std::string& kind) {
  std::map<std::string, std::map<std::string, std::string>> by_item;
  for (const auto& j : judgments) {
    if (j.kind == kind) by_item[j.item_id][j.annotator_id] = j.value;
  }
  std::vector<std::string> out;
  for (const auto& [id, votes] : by_item) {
    if (votes.size() < 2) continue;
    std::set<std::string> distinct;
    for (const auto& [a, v] : votes) distinct.insert(v);
    if (distinct.size() == 1) out.push_back(id);
  }
  return out;
}

}  // namespace jf::eval
