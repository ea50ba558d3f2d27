#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace jf::metrics {

struct RegressionErrors {
  double mse = 0.0;
  double rmse = 0.0;
};

// Throws std::invalid_argument on length mismatch or empty input.
RegressionErrors regression_errors(std::span<const double> preds, std::span<const double> targets);

// Ranks starting at 1; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct Correlations {
  std::optional<double> pearson;
  std::optional<double> spearman;
};

// Requires equal lengths >= 2 (std::invalid_argument otherwise).
Correlations correlations(std::span<const double> preds, std::span<const double> targets);

// Cohen's kappa with expected agreement from the product of marginals.
// nullopt when expected agreement is 1 (both annotators use one shared class).
std::optional<double> cohen_kappa(std::span<const std::string> a, std::span<const std::string> b);
std::optional<double> cohen_kappa(std::span<const int> a, std::span<const int> b);

double raw_agreement(std::span<const std::string> a, std::span<const std::string> b);

enum class Tail { upper, lower, two_sided };

double binomial_pmf(std::uint64_t k, std::uint64_t n, double p);

// Exact tail probability of Binomial(n, p0): upper P(X >= k), lower P(X <= k),
// two-sided sums every outcome no more likely than k.
double binomial_test(std::uint64_t k, std::uint64_t n, double p0, Tail tail);

// Central interval [lo, hi] with P(X < lo) <= alpha/2 and P(X > hi) <= alpha/2,
// both bounds as tight as possible.
std::pair<std::uint64_t, std::uint64_t> binomial_central_interval(std::uint64_t n, double p,
                                                                  double alpha);

}  // namespace jf::metrics
