#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace stablewalk {

// Right-continuous empirical CDF over a sorted copy of the sample.
class EcdfView {
 public:
  explicit EcdfView(std::vector<double> values);

  double operator()(double x) const;  // P(X <= x)
  std::int64_t count() const { return static_cast<std::int64_t>(values_.size()); }
  const std::vector<double>& sorted_values() const { return values_; }

 private:
  std::vector<double> values_;
};

struct KsResult {
  double statistic = 0.0;  // sup |F_a - F_b|
  double p_value = 1.0;    // asymptotic Kolmogorov tail
  std::int64_t n_a = 0;
  std::int64_t n_b = 0;

  double effective_n() const {
    return static_cast<double>(n_a) * static_cast<double>(n_b) /
           static_cast<double>(n_a + n_b);
  }
};

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Largest D still accepted at the given level for effective size n_e.
double ks_critical_value(double level, double effective_n);

// Tail of the asymptotic Kolmogorov distribution, Q(lambda) = P(K > lambda).
double kolmogorov_tail(double lambda);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;  // in log space
  double slope_stderr = 0.0;
};

// Weighted least squares of log(y) on log(x). Weights are inverse variances
// of log(y); zero/absent weights degrade to equal weighting.
LogLogFit loglog_fit(std::span<const double> xs, std::span<const double> ys,
                     std::span<const double> weights);

// Percentile bootstrap. Deterministic for a fixed seed.
std::pair<double, double> bootstrap_ci(std::span<const double> samples,
                                       const std::function<double(std::span<const double>)>& statistic,
                                       int resamples, double level,
                                       std::uint64_t seed);

double sample_quantile(std::span<const double> sorted, double q);  // type-7
double sample_mean(std::span<const double> values);
double sample_stddev(std::span<const double> values);

}  // namespace stablewalk
