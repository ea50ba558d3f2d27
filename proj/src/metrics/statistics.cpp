#include "jf/metrics/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace jf::metrics {
namespace {

void require_aligned(std::size_t a, std::size_t b, std::size_t min_len, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
  if (a < min_len) {
    throw std::invalid_argument(std::string(what) + ": needs at least " +
                                std::to_string(min_len) + " values");
  }
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

template <typename T>
std::optional<double> kappa_impl(std::span<const T> a, std::span<const T> b) {
  require_aligned(a.size(), b.size(), 1, "cohen_kappa");
  std::map<T, double> margin_a, margin_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    margin_a[a[i]] += 1.0;
    margin_b[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double n = static_cast<double>(a.size());
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, count] : margin_a) {
    auto it = margin_b.find(label);
    if (it != margin_b.end()) p_e += (count / n) * (it->second / n);
  }
  if (std::abs(1.0 - p_e) < 1e-15) return std::nullopt;
  return (p_o - p_e) / (1.0 - p_e);
}

}  // namespace

RegressionErrors regression_errors(std::span<const double> preds, std::span<const double> targets) {
  require_aligned(preds.size(), targets.size(), 1, "regression_errors");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    sum += d * d;
  }
  RegressionErrors out;
  out.mse = sum / static_cast<double>(preds.size());
  out.rmse = std::sqrt(out.mse);
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  require_aligned(x.size(), y.size(), 2, "pearson");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  require_aligned(x.size(), y.size(), 2, "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

Correlations correlations(std::span<const double> preds, std::span<const double> targets) {
  require_aligned(preds.size(), targets.size(), 2, "correlations");
  return {pearson(preds, targets), spearman(preds, targets)};
}

std::optional<double> cohen_kappa(std::span<const std::string> a, std::span<const std::string> b) {
  return kappa_impl<std::string>(a, b);
}

std::optional<double> cohen_kappa(std::span<const int> a, std::span<const int> b) {
  return kappa_impl<int>(a, b);
}

double raw_agreement(std::span<const std::string> a, std::span<const std::string> b) {
  require_aligned(a.size(), b.size(), 1, "raw_agreement");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

double binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
  if (k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  if (n <= 62) {
    // Exact coefficient; with dyadic p the whole term is exact in double.
    unsigned __int128 c = 1;
    const std::uint64_t m = std::min(k, n - k);
    for (std::uint64_t i = 0; i < m; ++i) c = c * (n - i) / (i + 1);
    return static_cast<double>(static_cast<std::uint64_t>(c)) *
           std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(n - k));
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  const double log_choose = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
  return std::exp(log_choose + kd * std::log(p) + (nd - kd) * std::log1p(-p));
}

double binomial_test(std::uint64_t k, std::uint64_t n, double p0, Tail tail) {
  if (k > n) throw std::invalid_argument("binomial_test: k > n");
  if (p0 < 0.0 || p0 > 1.0) throw std::invalid_argument("binomial_test: p0 outside [0,1]");
  double sum = 0.0;
  switch (tail) {
    case Tail::upper:
      for (std::uint64_t j = k; j <= n; ++j) sum += binomial_pmf(j, n, p0);
      break;
    case Tail::lower:
      for (std::uint64_t j = 0; j <= k; ++j) sum += binomial_pmf(j, n, p0);
      break;
    case Tail::two_sided: {
      const double observed = binomial_pmf(k, n, p0);
      for (std::uint64_t j = 0; j <= n; ++j) {
        const double pj = binomial_pmf(j, n, p0);
        if (pj <= observed * (1.0 + 1e-7)) sum += pj;
      }
      break;
    }
  }
  return std::min(sum, 1.0);
}

std::pair<std::uint64_t, std::uint64_t> binomial_central_interval(std::uint64_t n, double p,
                                                                  double alpha) {
  const double half = alpha / 2.0;
  std::uint64_t lo = 0;
  double below = 0.0;  // P(X < lo)
  while (lo < n && below + binomial_pmf(lo, n, p) <= half) below += binomial_pmf(lo++, n, p);
  std::uint64_t hi = n;
  double above = 0.0;  // P(X > hi)
  while (hi > lo && above + binomial_pmf(hi, n, p) <= half) above += binomial_pmf(hi--, n, p);
  return {lo, hi};
}

}  // namespace jf::metrics
