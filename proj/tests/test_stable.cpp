#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "stablewalk/errors.hpp"
#include "stablewalk/stable.hpp"
#include "stablewalk/stats.hpp"

using namespace stablewalk;

namespace {

std::vector<double> draws(const StableParams& params, std::int64_t count, std::uint64_t seed) {
  return sample_stable_batch_serial(params, count, seed);
}

}  // namespace

TEST_CASE("positivity parameter closed form") {
  CHECK(positivity_parameter(1.5, 0.0) == 0.5);
  // arctan(tan(3*pi/4)) = -pi/4, so rho = 1/2 - 1/6.
  CHECK(positivity_parameter(1.5, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(positivity_parameter(2.0, 0.7) == 0.5);
  CHECK(positivity_parameter(2.0, -1.0) == 0.5);
  CHECK_THROWS_AS(positivity_parameter(1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(positivity_parameter(1.5, 1.5), ConfigError);
}

TEST_CASE("positivity parameter symmetries") {
  for (double alpha : {1.1, 1.3, 1.5, 1.7, 1.9, 2.0}) {
    CHECK(positivity_parameter(alpha, 0.0) == 0.5);
    for (double beta : {0.1, 0.35, 0.8, 1.0}) {
      const double sum = positivity_parameter(alpha, beta) + positivity_parameter(alpha, -beta);
      CHECK(std::abs(sum - 1.0) < 1e-14);
      const double rho = positivity_parameter(alpha, beta);
      CHECK(rho > 0.0);
      CHECK(rho < 1.0);
    }
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(StableParams(0.9, 0.0), ConfigError);
  CHECK_THROWS_AS(StableParams(2.1, 0.0), ConfigError);
  CHECK_THROWS_AS(StableParams(1.5, -1.2), ConfigError);
  CHECK_THROWS_AS(StableParams(1.5, 0.0, 0.0), ConfigError);
  CHECK(StableParams(2.0, 0.3).gaussian_endpoint());
  CHECK_FALSE(StableParams(1.5, 0.3).gaussian_endpoint());
}

TEST_CASE("symmetric draws: median and sign balance") {
  const StableParams params(1.5, 0.0, 1.0);
  const std::int64_t n = 1000000;
  const auto xs = draws(params, n, 101);
  std::int64_t positives = 0;
  for (double x : xs) positives += x > 0.0;
  const double p = static_cast<double>(positives) / static_cast<double>(n);
  CHECK(std::abs(p - 0.5) < 3.0 * oracle::binom_se(0.5, n));

  std::vector<double> sorted(xs);
  std::sort(sorted.begin(), sorted.end());
  const double median = sample_quantile(sorted, 0.5);
  // Median stderr ~ 1/(2 f(0) sqrt(n)); f(0) < 0.3 for this law, so 3 sigma
  // is comfortably below 0.01.
  CHECK(std::abs(median) < 0.01);
}

TEST_CASE("totally skewed draws: P(X>0) matches rho = 1/3") {
  const StableParams params(1.5, 1.0, 1.0);
  const std::int64_t n = 1000000;
  const auto xs = draws(params, n, 202);
  std::int64_t positives = 0;
  for (double x : xs) positives += x > 0.0;
  const double p = static_cast<double>(positives) / static_cast<double>(n);
  CHECK(std::abs(p - 1.0 / 3.0) < 3.0 * oracle::binom_se(1.0 / 3.0, n));
}

TEST_CASE("beta=0 draws are symmetric in distribution") {
  const StableParams params(1.5, 0.0, 1.0);
  const auto xs = draws(params, 100000, 303);
  std::vector<double> negated(xs);
  for (auto& x : negated) x = -x;
  const auto ks = ks_two_sample(xs, negated);
  CHECK(ks.statistic < ks_critical_value(0.01, ks.effective_n()));
}

TEST_CASE("sum stability: n-fold sums rescale to one draw") {
  const StableParams params(1.5, 0.4, 1.0);
  const std::int64_t m = 100000;
  const auto reference = draws(params, m, 404);
  for (int n : {2, 10, 100}) {
    std::vector<double> sums(static_cast<std::size_t>(m));
    const double norm = std::pow(static_cast<double>(n), 1.0 / params.alpha);
    for (std::int64_t i = 0; i < m; ++i) {
      auto rng = RngStream::substream(505 + static_cast<std::uint64_t>(n), salt::kStableSample,
                                      static_cast<std::uint64_t>(i));
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += sample_standard_stable(params, rng);
      sums[static_cast<std::size_t>(i)] = s / norm;
    }
    const auto ks = ks_two_sample(sums, reference);
    CHECK(ks.statistic < ks_critical_value(0.01, ks.effective_n()));
  }
}

TEST_CASE("gaussian endpoint: alpha=2 draws have variance 2") {
  const StableParams params(2.0, 0.0, 1.0);
  const std::int64_t n = 200000;
  const auto xs = draws(params, n, 606);
  double sum = 0.0, sum_sq = 0.0;
  for (double x : xs) {
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sum_sq / static_cast<double>(n) - mean * mean;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(2.0 / static_cast<double>(n)));
  // var(sample variance) ~ 2 sigma^4 / n for Gaussian data
  CHECK(std::abs(var - 2.0) < 3.0 * std::sqrt(2.0 * 4.0 / static_cast<double>(n)));
}

TEST_CASE("stable path: one step is one draw, endpoint scaling is exact") {
  const StableParams params(1.5, 0.0, 1.0);
  auto rng = RngStream::substream(707, salt::kStablePath, 0);
  const auto path = sample_stable_path(params, 1, 1.0, rng);
  REQUIRE(path.size() == 1);
  auto rng2 = RngStream::substream(707, salt::kStablePath, 0);
  CHECK(path[0] == sample_standard_stable(params, rng2));
}

TEST_CASE("stable path self-similarity across horizons") {
  const StableParams params(1.5, 0.0, 1.0);
  const std::int64_t m = 100000;
  const double t = 3.0;
  std::vector<double> horizon_t(static_cast<std::size_t>(m)), scaled_one(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) {
    auto rng_a = RngStream::substream(808, salt::kStablePath, static_cast<std::uint64_t>(i));
    horizon_t[static_cast<std::size_t>(i)] = sample_stable_path(params, 7, t, rng_a).back();
    auto rng_b = RngStream::substream(909, salt::kStablePath, static_cast<std::uint64_t>(i));
    scaled_one[static_cast<std::size_t>(i)] =
        std::pow(t, 1.0 / params.alpha) * sample_stable_path(params, 13, 1.0, rng_b).back();
  }
  const auto ks = ks_two_sample(horizon_t, scaled_one);
  CHECK(ks.statistic < ks_critical_value(0.01, ks.effective_n()));
}

TEST_CASE("stable path endpoint sign balance on a fine grid") {
  const StableParams params(1.5, 0.0, 1.0);
  const std::int64_t m = 100000;
  std::int64_t positives = 0;
  for (std::int64_t i = 0; i < m; ++i) {
    auto rng = RngStream::substream(1010, salt::kStablePath, static_cast<std::uint64_t>(i));
    positives += sample_stable_path(params, 1024, 1.0, rng).back() > 0.0;
  }
  const double p = static_cast<double>(positives) / static_cast<double>(m);
  CHECK(std::abs(p - 0.5) < 3.0 * oracle::binom_se(0.5, m));
}

TEST_CASE("stable survival: monotone, one at tiny t, and the symmetric slope") {
  const StableParams params(1.5, 0.0, 1.0);
  const std::vector<double> t_grid{0.05, 4, 8, 16, 32, 64, 128, 256, 512};
  const auto table = stable_survival_estimate(params, 1.0, t_grid, 4, 200000, 111, 0);
  REQUIRE(table.rows.size() == t_grid.size());
  CHECK(table.rows.front().p_hat == 1.0);  // t below the first grid point
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    CHECK(table.rows[i].p_hat <= table.rows[i - 1].p_hat);

  std::vector<double> xs, ys, ws;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    xs.push_back(row.t);
    ys.push_back(row.p_hat);
    const double se_log = row.stderr_ / row.p_hat;
    ws.push_back(1.0 / (se_log * se_log));
  }
  const auto fit = loglog_fit(xs, ys, ws);
  CHECK(std::abs(fit.slope + 0.5) < 0.05);
}

TEST_CASE("meander endpoints are positive and grid metadata is kept") {
  const StableParams params(1.5, 0.0, 1.0);
  const auto batch = sample_meander_endpoints(params, 64, 2000, 222, 0);
  CHECK(batch.samples.size() == 2000);
  CHECK(batch.grid_steps == 64);
  CHECK(batch.attempts >= 2000);
  for (const auto& s : batch.samples) {
    CHECK(s.value > 0.0);
    CHECK(s.grid_steps == 64);
  }
}

TEST_CASE("meander grid_steps=2 acceptance matches the two-step brute force") {
  const StableParams params(1.5, 0.0, 1.0);
  const auto batch = sample_meander_endpoints(params, 2, 30000, 333, 0);

  const std::int64_t reps = 200000;
  const double scale = std::pow(0.5, 1.0 / params.alpha);
  const double brute = oracle::two_step_positive_rate(
      [&](std::int64_t i) {
        auto rng = RngStream::substream(99333, salt::kStableSample, static_cast<std::uint64_t>(i));
        return std::pair<double, double>{scale * sample_standard_stable(params, rng),
                                         scale * sample_standard_stable(params, rng)};
      },
      reps);

  const double se = std::sqrt(oracle::binom_se(brute, reps) * oracle::binom_se(brute, reps) +
                              oracle::binom_se(brute, batch.attempts) *
                                  oracle::binom_se(brute, batch.attempts));
  CHECK(std::abs(batch.acceptance_rate - brute) < 3.0 * se);
  // Exact value for a symmetric continuous walk: 3/8.
  CHECK(std::abs(batch.acceptance_rate - oracle::sparre_andersen_positive(2)) <
        3.0 * oracle::binom_se(0.375, batch.attempts));
}

TEST_CASE("meander acceptance decays like the survival power law") {
  const StableParams params(1.5, 0.0, 1.0);
  const auto coarse = sample_meander_endpoints(params, 256, 8000, 444, 0);
  const auto fine = sample_meander_endpoints(params, 512, 8000, 445, 0);
  const double ratio = std::log2(coarse.acceptance_rate / fine.acceptance_rate);
  CHECK(std::abs(ratio - 0.5) < 0.1);
  // Cross-check both rates against the exact discrete-walk values.
  CHECK(std::abs(coarse.acceptance_rate - oracle::sparre_andersen_positive(256)) <
        4.0 * oracle::binom_se(coarse.acceptance_rate, coarse.attempts));
  CHECK(std::abs(fine.acceptance_rate - oracle::sparre_andersen_positive(512)) <
        4.0 * oracle::binom_se(fine.acceptance_rate, fine.attempts));
}

TEST_CASE("meander gives up below the acceptance floor") {
  const StableParams params(1.5, 0.0, 1.0);
  // A floor above the true ~3.5% acceptance rate triggers the abort.
  CHECK_THROWS_AS(sample_meander_endpoints(params, 256, 1000000, 555, 0, 0.2),
                  StatisticalAbort);
}

TEST_CASE("meander input validation") {
  const StableParams params(1.5, 0.0, 1.0);
  CHECK_THROWS_AS(sample_meander_endpoints(params, 1, 10, 1, 0), ConfigError);
  CHECK_THROWS_AS(sample_meander_endpoints(params, 4, 0, 1, 0), ConfigError);
}

TEST_CASE("sampler and batch determinism, serial equals parallel") {
  const StableParams params(1.7, -0.3, 2.0);
  const auto a = sample_stable_batch(params, 20000, 666, 3);
  const auto b = sample_stable_batch(params, 20000, 666, 1);
  const auto c = sample_stable_batch_serial(params, 20000, 666);
  CHECK(a == b);
  CHECK(a == c);

  const auto m1 = sample_meander_endpoints(params, 32, 1500, 777, 3);
  const auto m2 = sample_meander_endpoints_serial(params, 32, 1500, 777);
  CHECK(m1.attempts == m2.attempts);
  CHECK(m1.values() == m2.values());

  const std::vector<double> t_grid{1, 2, 4, 8};
  const auto s1 = stable_survival_estimate(params, 1.0, t_grid, 4, 20000, 888, 3);
  const auto s2 = stable_survival_estimate_serial(params, 1.0, t_grid, 4, 20000, 888);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    CHECK(s1.rows[i].survivors == s2.rows[i].survivors);
    CHECK(s1.rows[i].p_hat == s2.rows[i].p_hat);
  }
}
