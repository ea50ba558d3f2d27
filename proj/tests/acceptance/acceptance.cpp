// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>

#include "jf/assemble/assembler.hpp"
#include "jf/bootstrap/engine.hpp"
#include "jf/bootstrap/mock_world.hpp"
#include "jf/core/log.hpp"
#include "jf/core/rng.hpp"
#include "jf/core/serialize.hpp"
#include "jf/eval/agreement.hpp"
#include "jf/metrics/lexical.hpp"
#include "jf/metrics/parsers.hpp"
#include "jf/metrics/statistics.hpp"
#include "jf/select/set_cover.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"

using namespace jf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Collects the first few failure messages.
struct Check {
  bool ok = true;
  std::size_t failures = 0;
  std::string first;
  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (failures++ == 0) first = what;
  }
  Outcome outcome(const std::string& detail) const {
    if (ok) return {true, detail};
    return {false, first + (failures > 1 ? " (+" + std::to_string(failures - 1) + " more)" : "")};
  }
};

int g_failed = 0;

void run(const std::string& name, double budget_s, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.ok && secs > budget_s) {
    o = {false, "took " + std::to_string(secs) + " s, budget " + std::to_string(budget_s) + " s"};
  }
  g_failed += !o.ok;
  std::printf("%s  %-28s %8.2f s  %s\n", o.ok ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

struct World {
  PromptLibrary prompts = PromptLibrary::load(JF_PROMPT_DIR);
  FlagTaxonomy taxonomy = FlagTaxonomy::load(std::string(JF_CONFIG_DIR) + "/flag_taxonomy.toml");
};

std::vector<Sample> synthetic_samples(std::size_t n) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    char id[16];
    std::snprintf(id, sizeof id, "img%05zu", i);
    s.id = id;
    s.image_ref = "images/" + s.id + ".png";
    s.label = i % 2 ? Label::fake : Label::real;
    s.source = s.label == Label::real ? Source::real : Source::t2i;
    out.push_back(s);
  }
  return out;
}

std::vector<BootstrapRecord> mock_bootstrap(const World& w, const std::vector<Sample>& samples,
                                            bootstrap::BootstrapConfig cfg, bootstrap::MockWorldOptions opt = {}) {
  gateway::BackendConfig bc;
  bc.retry.max_attempts = 1;
  opt.levels = cfg.levels;
  gateway::Gateway gw(std::make_shared<gateway::FunctionBackend>(bootstrap::mock_world_chat(opt)), bc);
  bootstrap::BootstrapEngine engine(gw, w.prompts, w.taxonomy, cfg);
  return engine.bootstrap_all(samples, pipeline::annotations_for(samples), 4);
}

Outcome count_law(const World& w) {
  const auto records = mock_bootstrap(w, synthetic_samples(825), {});
  std::size_t complete = 0;
  for (const auto& r : records) complete += r.complete;
  const auto pw = assemble::build_pointwise(records);
  const auto pp = assemble::build_pairwise(records, 50, 1);
  Check c;
  c.expect(complete == 825, "complete records " + std::to_string(complete));
  c.expect(pw.size() == 20625, "pointwise " + std::to_string(pw.size()));
  c.expect(pp.size() == 41250, "pairwise " + std::to_string(pp.size()));
  return c.outcome(std::to_string(pw.size()) + " pointwise, " + std::to_string(pp.size()) + " pairwise");
}

// Scripted evaluator: the rating predicted for (image, level, revision).
// Some levels align after a few revisions, some never do.
int scripted_rating(const std::string& image, int level, int revision, std::uint64_t seed, int T) {
  const auto h = splitmix64(fnv1a64(image) ^ (seed * 131 + static_cast<std::uint64_t>(level)));
  if (h % 5 == 0) return level <= 2 ? 5 : 1;
  const int align_at = static_cast<int>((h >> 8) % static_cast<std::uint64_t>(T + 2));
  if (revision >= align_at) return level;
  return level <= 2 ? level + 3 : level - 2;
}

Outcome loop_soundness(const World& w) {
  Check c;
  std::size_t accepted = 0, dropped = 0, runs = 0;
  for (int T = 1; T <= 5; ++T) {
    for (int alpha = 0; alpha <= 2; ++alpha) {
      for (std::uint64_t seed = 0; seed < 4; ++seed) {
        std::map<std::pair<std::string, int>, int> eval_calls;
        std::mutex mu;
        bootstrap::MockWorldOptions opt;
        opt.evaluator = [&, seed, T](const bootstrap::MockMarker& m) {
          {
            std::lock_guard lock(mu);
            ++eval_calls[{m.image, m.level}];
          }
          return scripted_rating(m.image, m.level, m.revision, seed, T);
        };
        bootstrap::BootstrapConfig cfg;
        cfg.max_iterations = T;
        cfg.alpha = alpha;
        cfg.paraphrase_k = 0;
        cfg.seed = seed;
        const auto records = mock_bootstrap(w, synthetic_samples(12), cfg, opt);
        ++runs;
        for (const auto& rec : records) {
          for (int level = 1; level <= 4; ++level) {
            const auto& st = rec.extra.at("levels").at(std::to_string(level));
            std::vector<const EvalTrace*> traces;
            for (const auto& t : rec.diagnostics) {
              if (t.candidate_rating == level) traces.push_back(&t);
            }
            const std::string where = rec.sample_id + " level " + std::to_string(level) + " T=" +
                                      std::to_string(T) + " alpha=" + std::to_string(alpha);
            // Expected outcome straight from the script.
            int expect_at = -1;
            for (int r = 0; r <= T && expect_at < 0; ++r) {
              if (std::abs(scripted_rating(rec.image_ref, level, r, seed, T) - level) <= alpha) expect_at = r;
            }
            const int calls = eval_calls[{rec.image_ref, level}];
            c.expect(calls <= T + 1, where + ": " + std::to_string(calls) + " evaluator calls");
            c.expect(calls == static_cast<int>(traces.size()), where + ": calls and traces disagree");
            if (expect_at >= 0) {
              ++accepted;
              c.expect(st.at("status") == "accepted", where + ": expected acceptance");
              c.expect(st.at("accepted_iteration") == expect_at, where + ": accepted at wrong iteration");
              c.expect(calls == expect_at + 1, where + ": evaluator calls " + std::to_string(calls));
              c.expect(!traces.empty() && traces.back()->deviation <= alpha, where + ": final deviation above alpha");
              c.expect(rec.accepted.count(level) == 1 && rec.accepted.at(level).front().iteration == expect_at,
                       where + ": accepted candidate missing");
            } else {
              ++dropped;
              c.expect(st.at("status") == "dropped", where + ": expected drop");
              c.expect(st.at("refinements") == T, where + ": refinements " + st.at("refinements").dump());
              c.expect(calls == T + 1, where + ": evaluator calls " + std::to_string(calls));
              c.expect(rec.accepted.count(level) == 0, where + ": dropped level kept");
            }
          }
        }
      }
    }
  }
  c.expect(accepted > 0 && dropped > 0, "fixtures did not exercise both outcomes");
  return c.outcome(std::to_string(runs) + " configurations, " + std::to_string(accepted) + " accepted, " +
                   std::to_string(dropped) + " dropped levels");
}

Outcome metric_oracles() {
  const auto all = oracle::all_strings({"a", "b", "c", "d"}, 5);
  Check c;
  std::size_t pairs = 0;
  double worst = 0.0;
  auto near = [&](double got, double want, const char* what, const oracle::Seq& x, const oracle::Seq& y) {
    const double d = std::abs(got - want);
    worst = std::max(worst, d);
    if (d > 1e-9) {
      std::string sx, sy;
      for (const auto& t : x) sx += t;
      for (const auto& t : y) sy += t;
      c.expect(false, std::string(what) + " mismatch on '" + sx + "' vs '" + sy + "'");
    }
  };
  for (const auto& cand : all) {
    for (const auto& ref : all) {
      ++pairs;
      const auto b = metrics::bleu(cand, ref, 3);
      if (cand.empty()) {
        c.expect(b.skipped, "empty candidate not skipped");
      } else {
        for (int n = 1; n <= 3; ++n) near(b.cumulative[n - 1], oracle::bleu(cand, ref, n), "bleu", cand, ref);
      }
      if (!cand.empty() && !ref.empty()) {
        near(metrics::rouge(cand, ref, metrics::RougeVariant::rouge1).f1, oracle::rouge_n(cand, ref, 1).f, "rouge1",
             cand, ref);
        near(metrics::rouge(cand, ref, metrics::RougeVariant::rouge2).f1, oracle::rouge_n(cand, ref, 2).f, "rouge2",
             cand, ref);
        near(metrics::rouge(cand, ref, metrics::RougeVariant::rougeL).f1, oracle::rouge_l(cand, ref).f, "rougeL",
             cand, ref);
      }
      near(metrics::meteor(cand, ref).score, oracle::meteor(cand, ref), "meteor", cand, ref);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu pairs, max |diff| %.1e", pairs, worst);
  return c.outcome(buf);
}

// Exact binomial tail as a rational over 2^n, by integer counting.
std::uint64_t upper_tail_count(std::uint64_t k, std::uint64_t n) {
  std::uint64_t total = 0;
  for (std::uint64_t j = k; j <= n; ++j) total += oracle::choose(n, j);
  return total;
}

Outcome statistics_suite() {
  using namespace metrics;
  Check c;
  {
    const std::vector<double> p{3, 4}, t{3, 2};
    const auto e = regression_errors(p, t);
    c.expect(e.mse == 2.0 && e.rmse == std::sqrt(2.0), "regression [3,4] vs [3,2]");
    c.expect(regression_errors(t, t).mse == 0.0, "regression identity");
    const std::vector<double> a{2}, b{3};
    const auto one = regression_errors(a, b);
    c.expect(one.mse == 1.0 && one.rmse == 1.0, "regression off by one");
  }
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(30);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.uniform_index(6));
      y[i] = static_cast<double>(rng.uniform_index(6));
    }
    double se = 0;
    for (std::size_t i = 0; i < n; ++i) se += (x[i] - y[i]) * (x[i] - y[i]);
    c.expect(std::abs(regression_errors(x, y).mse - se / n) < 1e-12, "mse brute force");
    // Average ranks by counting: rank = #less + (#equal + 1) / 2.
    auto ranks = [](const std::vector<double>& v) {
      std::vector<double> r(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (double u : v) {
          less += u < v[i];
          equal += u == v[i];
        }
        r[i] = less + (equal + 1) / 2;
      }
      return r;
    };
    auto product_moment = [](const std::vector<double>& a, const std::vector<double>& b) -> std::optional<double> {
      double ma = 0, mb = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
      }
      ma /= a.size();
      mb /= b.size();
      double sab = 0, saa = 0, sbb = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
      }
      if (saa == 0 || sbb == 0) return std::nullopt;
      return sab / std::sqrt(saa * sbb);
    };
    c.expect(average_ranks(x) == ranks(x), "average ranks with ties");
    const auto want_p = product_moment(x, y);
    const auto want_s = product_moment(ranks(x), ranks(y));
    const auto got = correlations(x, y);
    c.expect(got.pearson.has_value() == want_p.has_value(), "pearson definedness");
    c.expect(got.spearman.has_value() == want_s.has_value(), "spearman definedness");
    if (want_p && got.pearson) c.expect(std::abs(*got.pearson - *want_p) < 1e-12, "pearson brute force");
    if (want_s && got.spearman) c.expect(std::abs(*got.spearman - *want_s) < 1e-12, "spearman brute force");

    std::vector<int> la(n), lb(n);
    for (std::size_t i = 0; i < n; ++i) {
      la[i] = static_cast<int>(rng.uniform_index(3));
      lb[i] = rng.uniform_index(4) == 0 ? static_cast<int>(rng.uniform_index(3)) : la[i];
    }
    double po = 0, pe = 0;
    for (std::size_t i = 0; i < n; ++i) po += la[i] == lb[i];
    po /= n;
    for (int k = 0; k < 3; ++k) {
      double fa = 0, fb = 0;
      for (std::size_t i = 0; i < n; ++i) {
        fa += la[i] == k;
        fb += lb[i] == k;
      }
      pe += (fa / n) * (fb / n);
    }
    const auto kappa = cohen_kappa(la, lb);
    if (pe == 1.0) {
      c.expect(!kappa.has_value(), "kappa undefined when p_e = 1");
    } else {
      c.expect(kappa && std::abs(*kappa - (po - pe) / (1 - pe)) < 1e-12, "kappa brute force");
    }
  }
  {
    const std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y2, y3;
    for (double v : x) {
      y2.push_back(2 * v);
      y3.push_back(v * v * v);
    }
    c.expect(std::abs(*pearson(x, y2) - 1.0) < 1e-12, "pearson y = 2x");
    c.expect(std::abs(*spearman(x, y3) - 1.0) < 1e-12 && *pearson(x, y3) < 1.0, "x^3 rank invariance");
    const std::vector<double> tied{1, 2, 2, 3};
    c.expect(std::abs(*spearman(tied, tied) - 1.0) < 1e-12, "spearman with ties");
    const std::vector<int> a{1, 1, 0, 0}, b{1, 0, 0, 0};
    c.expect(std::abs(*cohen_kappa(a, b) - 0.5) < 1e-12, "kappa hand table");
  }
  for (std::uint64_t n = 1; n <= 40; ++n) {
    for (std::uint64_t k = 0; k <= n; ++k) {
      const double want = static_cast<double>(upper_tail_count(k, n)) / std::ldexp(1.0, static_cast<int>(n));
      const double got = binomial_test(k, n, 0.5, Tail::upper);
      c.expect(std::abs(got - want) <= 1e-15 * std::max(1.0, want) + 1e-300, "binomial tail n=" + std::to_string(n));
    }
  }
  const std::uint64_t num = upper_tail_count(14, 18);
  c.expect(num == 4048, "tail numerator " + std::to_string(num));
  const double p = binomial_test(14, 18, 0.5, Tail::upper);
  c.expect(p == 4048.0 / 262144.0, "binomial_test(14, 18) != 4048/262144");
  c.expect(std::abs(p - 0.015) < 0.0005, "not p ~ 0.015");
  c.expect(binomial_test(0, 18, 0.5, Tail::upper) == 1.0, "k = 0 tail");
  c.expect(binomial_test(18, 18, 0.5, Tail::upper) == std::ldexp(1.0, -18), "k = n tail");
  char buf[80];
  std::snprintf(buf, sizeof buf, "binomial(14,18) = %llu/262144 = %.5f", static_cast<unsigned long long>(num), p);
  return c.outcome(buf);
}

Outcome agreement_tallies() {
  const auto js = eval::judgments_from_tallies(88, 2, 10);
  const auto r = eval::agreement_report(js, "pairwise");
  Check c;
  c.expect(r.pairs.size() == 1, "expected one annotator pair");
  if (!c.ok) return c.outcome("");
  const auto& p = r.pairs[0];
  c.expect(p.overlap == 100, "overlap " + std::to_string(p.overlap));
  c.expect(p.both_correct == 88 && p.both_wrong == 2 && p.one_correct == 10, "tallies not reproduced");
  c.expect(p.raw_agreement == 0.90, "raw agreement " + std::to_string(p.raw_agreement));
  char buf[80];
  std::snprintf(buf, sizeof buf, "raw agreement %.2f, kappa %.2f", p.raw_agreement, p.kappa.value_or(NAN));
  return c.outcome(buf);
}

// Smallest symmetric [lo, hi] holding at least 99% of Binomial(n, 1/2),
// from exact log-space pmf sums.
std::pair<std::uint64_t, std::uint64_t> central_99(std::uint64_t n) {
  std::vector<double> pmf(n + 1);
  for (std::uint64_t k = 0; k <= n; ++k) {
    pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  double tail = 0;
  std::uint64_t lo = 0;
  while (tail + pmf[lo] <= 0.005) tail += pmf[lo++];
  return {lo, n - lo};
}

Outcome pairwise_balance(const World& w) {
  const auto records = mock_bootstrap(w, synthetic_samples(200), {});
  const auto a = assemble::build_pairwise(records, 50, 77);
  const auto b = assemble::build_pairwise(records, 50, 77);
  Check c;
  c.expect(a.size() == 10000, "pairs " + std::to_string(a.size()));
  std::size_t at_a = 0;
  for (const auto& p : a) at_a += (p.rating_a > p.rating_b);
  const auto [lo, hi] = central_99(a.size());
  c.expect(at_a >= lo && at_a <= hi, "position A count " + std::to_string(at_a) + " outside [" + std::to_string(lo) +
                                         ", " + std::to_string(hi) + "]");
  std::ostringstream sa, sb;
  for (const auto& p : a) sa << serialize_record(p) << '\n';
  for (const auto& p : b) sb << serialize_record(p) << '\n';
  c.expect(sa.str() == sb.str(), "reruns differ");
  return c.outcome(std::to_string(at_a) + "/10000 preferred at A, 99% interval [" + std::to_string(lo) + ", " +
                   std::to_string(hi) + "], reruns identical");
}

Outcome set_cover_quality() {
  Rng rng(31337);
  Check c;
  double worst = 1e9;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t n = 1 + rng.uniform_index(12);
    const std::size_t universe = 4 + rng.uniform_index(20);
    std::vector<select::LabeledImage> pool(n);
    std::vector<std::set<int>> sets(n);
    for (std::size_t i = 0; i < n; ++i) {
      pool[i].image_id = "i" + std::to_string(i);
      for (auto m = 1 + rng.uniform_index(6); m > 0; --m) {
        const int l = static_cast<int>(rng.uniform_index(universe));
        if (sets[i].insert(l).second) pool[i].label_set.push_back("l" + std::to_string(l));
      }
    }
    const std::size_t k = 1 + rng.uniform_index(n);
    const auto sel = select::greedy_set_cover(pool, k, static_cast<std::uint64_t>(inst), 1);
    const std::size_t opt = oracle::max_coverage(sets, k);
    const double bound = (1.0 - std::exp(-1.0)) * static_cast<double>(opt);
    c.expect(static_cast<double>(sel.covered_labels) >= bound,
             "instance " + std::to_string(inst) + ": " + std::to_string(sel.covered_labels) + " < bound");
    if (opt > 0) worst = std::min(worst, static_cast<double>(sel.covered_labels) / static_cast<double>(opt));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "1000 instances, worst greedy/OPT %.3f", worst);
  return c.outcome(buf);
}

Outcome parser_fuzz() {
  Rng rng(4242);
  const std::string pieces[] = {"<score>", "</score>", "<answer>", "</answer>", "<reasoning>", "</reasoning>",
                                "A", "B", "3", "5", "-1", "99", " ", "\n", "<", ">", "/"};
  std::size_t valid_p = 0, skip_p = 0, valid_q = 0, skip_q = 0;
  Check c;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    if (i % 2 == 0) {
      // A well-formed reply with a few random byte edits.
      static const std::string seeds[] = {"<reasoning>fine</reasoning>\n<score>4</score>", "<answer>B</answer>",
                                          "<score>2</score><reasoning>r</reasoning>", "<answer> a </answer>"};
      s = seeds[rng.uniform_index(4)];
      for (auto n = rng.uniform_index(4); n > 0 && !s.empty(); --n) {
        const auto at = rng.uniform_index(s.size());
        switch (rng.uniform_index(3)) {
          case 0:
            s[at] = static_cast<char>(rng.uniform_index(256));
            break;
          case 1:
            s.erase(at, 1);
            break;
          default:
            s.insert(at, 1, static_cast<char>(rng.uniform_index(256)));
        }
      }
    } else {
      for (auto n = rng.uniform_index(48); n > 0; --n) {
        if (rng.uniform_index(3) == 0) {
          s += pieces[rng.uniform_index(std::size(pieces))];
        } else {
          s += static_cast<char>(rng.uniform_index(256));
        }
      }
    }
    try {
      const auto p = metrics::parse_pointwise(s);
      if (p) {
        c.expect(p->rating >= 1 && p->rating <= 5, "pointwise rating out of range");
        ++valid_p;
      } else {
        ++skip_p;
      }
      const auto q = metrics::parse_pairwise(s);
      if (q) {
        c.expect(*q == Choice::A || *q == Choice::B, "pairwise choice invalid");
        ++valid_q;
      } else {
        ++skip_q;
      }
    } catch (const std::exception& e) {
      c.expect(false, std::string("parser threw: ") + e.what());
    }
  }
  c.expect(valid_p + skip_p == 10000 && valid_q + skip_q == 10000, "accounting");
  return c.outcome("pointwise " + std::to_string(valid_p) + " valid + " + std::to_string(skip_p) +
                   " skipped, pairwise " + std::to_string(valid_q) + " valid + " + std::to_string(skip_q) +
                   " skipped");
}

Outcome end_to_end() {
  const auto dir = fs::temp_directory_path() / "jf_acceptance_e2e";
  fs::remove_all(dir);
  pipeline::Options opt;
  opt.pool = 400;
  opt.samples = 40;
  const auto r = pipeline::run(dir, opt);
  fs::remove_all(dir);
  Check c;
  const auto rmse = pipeline::metric(r.pointwise_report, "rmse");
  const auto acc = pipeline::metric(r.pairwise_report, "accuracy");
  c.expect(r.pointwise.size() == 40 * 25, "pointwise items " + std::to_string(r.pointwise.size()));
  c.expect(rmse && *rmse == 0.0, "rmse not 0");
  c.expect(acc && *acc == 1.0, "pairwise accuracy not 1");
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu samples, %zu pointwise / %zu pairwise items, RMSE %.4f, accuracy %.4f",
                r.samples.size(), r.pointwise.size(), r.pairwise.size(), rmse.value_or(NAN), acc.value_or(NAN));
  return c.outcome(buf);
}

}  // namespace

int main() {
  set_log_sink([](LogLevel, std::string_view) {});
  const World w;
  run("count law", 300, [&] { return count_law(w); });
  run("loop soundness", 60, [&] { return loop_soundness(w); });
  run("metric oracle equivalence", 120, metric_oracles);
  run("statistics suite", 10, statistics_suite);
  run("agreement reproduction", 1, agreement_tallies);
  run("pairwise balance", 60, [&] { return pairwise_balance(w); });
  run("set-cover quality", 120, set_cover_quality);
  run("parser totality fuzz", 30, parser_fuzz);
  run("end-to-end mock pipeline", 300, end_to_end);
  std::printf("%d of 9 criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
