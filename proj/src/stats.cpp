#include "stablewalk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stablewalk/errors.hpp"
#include "stablewalk/parallel.hpp"
#include "stablewalk/rng.hpp"

namespace stablewalk {

EcdfView::EcdfView(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ConfigError("EcdfView: empty sample");
  std::sort(values_.begin(), values_.end());
}

double EcdfView::operator()(double x) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), x);
  return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // Series 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2); converges fast for lambda
  // above ~0.3, and the distribution mass below that is essentially 1.
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 101; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  double d = 0.0;
  while (ia < sa.size() && ib < sb.size()) {
    const double va = sa[ia];
    const double vb = sb[ib];
    if (va <= vb) {
      while (ia < sa.size() && sa[ia] == va) ++ia;
    }
    if (vb <= va) {
      while (ib < sb.size() && sb[ib] == vb) ++ib;
    }
    d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }

  KsResult r;
  r.statistic = d;
  r.n_a = static_cast<std::int64_t>(sa.size());
  r.n_b = static_cast<std::int64_t>(sb.size());
  r.p_value = kolmogorov_tail(std::sqrt(r.effective_n()) * d);
  return r;
}

double ks_critical_value(double level, double effective_n) {
  if (level <= 0.0 || level >= 1.0) throw ConfigError("ks_critical_value: level in (0,1)");
  if (effective_n <= 0.0) throw ConfigError("ks_critical_value: effective_n > 0");
  const double c = std::sqrt(-0.5 * std::log(level / 2.0));
  return c / std::sqrt(effective_n);
}

LogLogFit loglog_fit(std::span<const double> xs, std::span<const double> ys,
                     std::span<const double> weights) {
  const std::size_t n = xs.size();
  if (n < 3) throw ConfigError("loglog_fit: need at least 3 points");
  if (ys.size() != n || (!weights.empty() && weights.size() != n))
    throw ConfigError("loglog_fit: length mismatch");

  std::vector<double> lx(n), ly(n), w(n);
  double max_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (xs[i] <= 0.0 || ys[i] <= 0.0) throw ConfigError("loglog_fit: nonpositive input");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
    w[i] = weights.empty() ? 1.0 : weights[i];
    if (w[i] < 0.0) throw ConfigError("loglog_fit: negative weight");
    max_w = std::max(max_w, w[i]);
  }
  if (max_w == 0.0) std::fill(w.begin(), w.end(), 1.0);

  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    swx += w[i] * lx[i];
    swy += w[i] * ly[i];
  }
  const double xbar = swx / sw;
  const double ybar = swy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (lx[i] - xbar) * (lx[i] - xbar);
    sxy += w[i] * (lx[i] - xbar) * (ly[i] - ybar);
  }
  if (sxx <= 0.0) throw ConfigError("loglog_fit: degenerate abscissae");

  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  // Assumes the weights are inverse variances of log(y).
  fit.slope_stderr = std::sqrt(1.0 / sxx);
  return fit;
}

double sample_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ConfigError("sample_quantile: empty sample");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

double sample_mean(std::span<const double> values) {
  if (values.empty()) throw ConfigError("sample_mean: empty sample");
  std::vector<double> copy(values.begin(), values.end());
  return compensated_sum(copy) / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw ConfigError("sample_stddev: need >= 2 values");
  const double mean = sample_mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

std::pair<double, double> bootstrap_ci(std::span<const double> samples,
                                       const std::function<double(std::span<const double>)>& statistic,
                                       int resamples, double level,
                                       std::uint64_t seed) {
  if (samples.empty()) throw ConfigError("bootstrap_ci: empty sample");
  if (resamples < 200) throw ConfigError("bootstrap_ci: resamples >= 200 required");
  if (level <= 0.0 || level >= 1.0) throw ConfigError("bootstrap_ci: level in (0,1)");

  const std::size_t n = samples.size();
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  std::vector<double> scratch(n);
  for (int r = 0; r < resamples; ++r) {
    auto rng = RngStream::substream(seed, salt::kBootstrap, static_cast<std::uint64_t>(r));
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t j = rng.next_u64() % n;
      scratch[i] = samples[static_cast<std::size_t>(j)];
    }
    stats[static_cast<std::size_t>(r)] = statistic(scratch);
  }
  std::sort(stats.begin(), stats.end());
  const double a = (1.0 - level) / 2.0;
  return {sample_quantile(stats, a), sample_quantile(stats, 1.0 - a)};
}

}  // namespace stablewalk
