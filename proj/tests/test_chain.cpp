#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "oracles.hpp"
#include "stablewalk/chain.hpp"
#include "stablewalk/errors.hpp"
#include "stablewalk/model_io.hpp"
#include "stablewalk/stats.hpp"

using namespace stablewalk;

namespace {

ParetoIncrementLaw symmetric_law(double alpha = 1.5) { return {alpha, 0.5, 0.5, 1.0, 0.0}; }

ChainModel two_state_model() {
  return build_model({{0.9, 0.1}, {0.2, 0.8}},
                     {{1.5, 0.8, 0.4, 1.0, 0.0}, {1.5, 0.4, 0.8, 1.0, 0.0}});
}

// One-sample KS against a fully specified CDF.
double one_sample_ks(std::vector<double> sample, const ParetoIncrementLaw& law) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = law.cdf(sample[i]);
    d = std::max(d, std::max(f - static_cast<double>(i) / n,
                             static_cast<double>(i + 1) / n - f));
  }
  return d;
}

}  // namespace

TEST_CASE("pareto law validation") {
  CHECK_THROWS_AS((ParetoIncrementLaw{2.5, 1.0, 1.0, 1.0, 0.0}).validate(), ConfigError);
  CHECK_THROWS_AS((ParetoIncrementLaw{1.5, 0.0, 0.0, 1.0, 0.0}).validate(), ConfigError);
  CHECK_THROWS_AS((ParetoIncrementLaw{1.5, -0.1, 1.0, 1.0, 0.0}).validate(), ConfigError);
  CHECK_THROWS_AS((ParetoIncrementLaw{1.5, 1.0, 1.0, 0.0, 0.0}).validate(), ConfigError);
  // Tail mass (c+ + c-) x0^{-a} / a = 2/1.5 > 1.
  CHECK_THROWS_AS((ParetoIncrementLaw{1.5, 1.5, 1.5, 1.0, 0.0}).validate(), ConfigError);
  symmetric_law().validate();
}

TEST_CASE("pareto law closed-form mean and CDF spot values") {
  // mean = (c+ - c-) x0^{1-a} / (a-1) + center
  const ParetoIncrementLaw law{1.5, 1.0, 0.5, 2.0, 0.0};
  law.validate();
  CHECK(law.mean() == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-14));
  const ParetoIncrementLaw shifted{1.5, 1.0, 0.5, 2.0, 3.0};
  CHECK(shifted.mean() == doctest::Approx(std::pow(2.0, -0.5) + 3.0).epsilon(1e-14));

  const auto sym = symmetric_law();
  CHECK(sym.tail_prob_pos() == doctest::Approx(1.0 / 3.0));
  CHECK(sym.core_mass() == doctest::Approx(1.0 / 3.0));
  CHECK(sym.cdf(-1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(sym.cdf(0.0) == doctest::Approx(0.5));
  CHECK(sym.cdf(1.0) == doctest::Approx(2.0 / 3.0));
  CHECK(sym.cdf(2.0) == doctest::Approx(1.0 - std::pow(2.0, -1.5) / 3.0).epsilon(1e-14));
  CHECK(sym.cdf(-40.0) + sym.cdf(40.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pareto sampling agrees with the CDF (one-sample KS)") {
  const ParetoIncrementLaw law{1.5, 0.9, 0.3, 1.0, -0.7};
  law.validate();
  const std::int64_t n = 100000;
  std::vector<double> sample(static_cast<std::size_t>(n));
  auto rng = RngStream::substream(31, salt::kHill, 1);
  for (auto& x : sample) x = law.sample(rng);
  // One-sample critical value at level 0.01: 1.628 / sqrt(n).
  CHECK(one_sample_ks(std::move(sample), law) < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("per-state tail balance matches c+/c-") {
  const ParetoIncrementLaw law{1.5, 0.8, 0.4, 1.0, 0.0};
  const std::int64_t n = 1000000;
  const double x = 5.0;
  std::int64_t above = 0, below = 0;
  auto rng = RngStream::substream(32, salt::kHill, 2);
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = law.sample(rng);
    above += v > x;
    below += v < -x;
  }
  const double ratio = static_cast<double>(above) / static_cast<double>(below);
  const double pa = static_cast<double>(above) / static_cast<double>(n);
  const double pb = static_cast<double>(below) / static_cast<double>(n);
  const double se_log =
      std::sqrt((1.0 - pa) / (pa * static_cast<double>(n)) + (1.0 - pb) / (pb * static_cast<double>(n)));
  // For center 0 both tails are exact power laws, so the ratio is exactly
  // c+/c- = 2 at any x >= cutoff.
  CHECK(std::abs(std::log(ratio) - std::log(2.0)) < 3.0 * se_log);
}

TEST_CASE("stationary distribution: closed forms and power-iteration oracle") {
  CHECK(stationary_distribution({{1.0}}) == std::vector<double>{1.0});

  const auto uniform = stationary_distribution({{0.6, 0.4}, {0.4, 0.6}});
  CHECK(uniform[0] == doctest::Approx(0.5).epsilon(1e-12));

  const TransitionMatrix p{{0.9, 0.1}, {0.2, 0.8}};
  const auto pi = stationary_distribution(p);
  CHECK(pi[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(pi[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const auto oracle_pi = oracle::stationary_power(p);
  CHECK(std::abs(pi[0] - oracle_pi[0]) < 1e-12);
  CHECK(std::abs(pi[1] - oracle_pi[1]) < 1e-12);
}

TEST_CASE("build_model: hand-solved two-state spectrum") {
  const auto model = two_state_model();
  CHECK(model.pi[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // trace 1.7, det 0.7 => eigenvalues 1 and 0.7
  CHECK(model.gap == doctest::Approx(0.3).epsilon(1e-10));
  const double lambda2 = second_eigenvalue_modulus_power(model.transition, model.pi);
  CHECK(std::abs((1.0 - lambda2) - model.gap) < 1e-8);
  // skew_beta = sum pi (c+ - c-) / sum pi (c+ + c-) = (1/9)
  CHECK(model.skew_beta == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("build_model: degenerate single state and rank-one transition") {
  const auto iid = build_model({{1.0}}, {symmetric_law()});
  CHECK(iid.pi == std::vector<double>{1.0});
  CHECK(iid.gap == 1.0);
  CHECK(iid.skew_beta == 0.0);

  const auto rank_one =
      build_model({{0.5, 0.5}, {0.5, 0.5}}, {symmetric_law(), symmetric_law()});
  CHECK(rank_one.pi[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rank_one.gap == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("build_model enforces the stationary centering") {
  const auto model = two_state_model();
  double mean = 0.0;
  for (int j = 0; j < model.num_states(); ++j)
    mean += model.pi[static_cast<std::size_t>(j)] * model.laws[static_cast<std::size_t>(j)].mean();
  CHECK(std::abs(mean) < 1e-10);
  // Conditional means keep mixed signs after the global shift.
  CHECK(model.laws[0].mean() > 0.0);
  CHECK(model.laws[1].mean() < 0.0);

  // Rebuilding from already-centered laws moves centers by < 1e-12.
  const auto rebuilt = build_model(model.transition, model.laws);
  for (int j = 0; j < model.num_states(); ++j)
    CHECK(std::abs(rebuilt.laws[static_cast<std::size_t>(j)].center -
                   model.laws[static_cast<std::size_t>(j)].center) < 1e-12);
}

TEST_CASE("build_model rejections") {
  const auto law = symmetric_law();
  // reducible
  CHECK_THROWS_AS(build_model({{1.0, 0.0}, {0.0, 1.0}}, {law, law}), ConfigError);
  // periodic
  CHECK_THROWS_AS(build_model({{0.0, 1.0}, {1.0, 0.0}}, {law, law}), ConfigError);
  // bad row sum
  CHECK_THROWS_AS(build_model({{0.9, 0.2}, {0.2, 0.8}}, {law, law}), ConfigError);
  // negative entry
  CHECK_THROWS_AS(build_model({{1.1, -0.1}, {0.2, 0.8}}, {law, law}), ConfigError);
  // mixed alpha
  CHECK_THROWS_AS(build_model({{0.5, 0.5}, {0.5, 0.5}}, {symmetric_law(1.5), symmetric_law(1.7)}),
                  ConfigError);
  // state cap
  CHECK_THROWS_AS(build_model({{0.4, 0.3, 0.3}, {0.3, 0.4, 0.3}, {0.3, 0.3, 0.4}},
                              {law, law, law}, 2),
                  ConfigError);
  // law count mismatch
  CHECK_THROWS_AS(build_model({{0.5, 0.5}, {0.5, 0.5}}, {law}), ConfigError);
}

TEST_CASE("simulate_walk: first step and float-exact telescoping") {
  const auto model = two_state_model();
  auto rng = RngStream::substream(40, salt::kWalk, 0);
  const auto path = simulate_walk(model, 0, 1000, rng);
  REQUIRE(path.increments.size() == 1000);
  REQUIRE(path.hidden_states.size() == 1001);
  CHECK(path.partial_sums[0] == path.increments[0]);
  double s = 0.0;
  for (std::size_t k = 0; k < path.increments.size(); ++k) {
    s += path.increments[k];
    CHECK(path.partial_sums[k] == s);  // bitwise: sums are built exactly this way
  }
  CHECK_THROWS_AS(simulate_walk(model, 5, 10, rng), ConfigError);
  CHECK_THROWS_AS(simulate_walk(model, 0, 0, rng), ConfigError);
}

TEST_CASE("simulate_walk occupation frequencies approach pi") {
  const auto model = two_state_model();
  auto rng = RngStream::substream(41, salt::kWalk, 1);
  const std::int64_t n = 1000000;
  const auto path = simulate_walk(model, 0, n, rng);
  std::int64_t in_state0 = 0;
  for (std::size_t k = 1; k < path.hidden_states.size(); ++k)
    in_state0 += path.hidden_states[k] == 0;
  const double freq = static_cast<double>(in_state0) / static_cast<double>(n);
  // Autocorrelated chain: var = pi0 pi1 (1+l2)/(1-l2) / n with l2 = 0.7.
  const double se = std::sqrt((2.0 / 9.0) * (1.7 / 0.3) / static_cast<double>(n));
  CHECK(std::abs(freq - 2.0 / 3.0) < 3.0 * se);
}

TEST_CASE("stationary-start increments average to zero") {
  const auto model = two_state_model();
  auto rng = RngStream::substream(42, salt::kWalk, 2);
  const std::int64_t n = 10000000;
  // Stationary start: draw J0 from pi.
  int state = rng.next_unit() < model.pi[0] ? 0 : 1;
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double xi = model.laws[static_cast<std::size_t>(state)].sample(rng);
    state = model.next_state(state, rng);
    sum += xi;
    sum_sq += xi * xi;
  }
  const double mean = sum / static_cast<double>(n);
  const double se = std::sqrt(sum_sq / static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("hill estimator against the exact Pareto oracle") {
  for (double alpha : {1.5, 1.8}) {
    const std::int64_t n = 1000000;
    const std::int64_t k = 10000;
    std::vector<double> sample(static_cast<std::size_t>(n));
    auto rng = RngStream::substream(43 + static_cast<std::uint64_t>(alpha * 10), salt::kHill, 3);
    for (auto& x : sample) x = oracle::pareto_inverse_cdf(rng.next_open_unit(), alpha, 1.0);
    const auto est = hill_estimate(std::move(sample), k);
    CHECK(est.k_used == k);
    CHECK(est.stderr_ == doctest::Approx(est.alpha_hat / 100.0));
    CHECK(std::abs(est.alpha_hat - alpha) < 0.05);
  }
}

TEST_CASE("hill estimator rejects degenerate tails") {
  CHECK_THROWS_AS(hill_estimate(std::vector<double>(100, 2.0), 20), ConfigError);
  CHECK_THROWS_AS(hill_estimate(std::vector<double>(100, 1.0), 5), ConfigError);
  CHECK_THROWS_AS(hill_estimate(std::vector<double>(10, 1.0), 50), ConfigError);
}

TEST_CASE("hill tail check on a symmetric model") {
  // Symmetric weights keep the center at zero, so |xi| has an exact Pareto tail.
  const auto model = build_model({{1.0}}, {symmetric_law()});
  const auto est = hill_tail_check(model, 1000000, 0.01, 44);
  CHECK(std::abs(est.alpha_hat - 1.5) < 4.0 * est.stderr_);
}

TEST_CASE("model spec round-trips exactly") {
  ModelSpec spec;
  spec.alpha = 1.5;
  spec.transition = {{0.9, 0.1}, {0.2, 0.8}};
  spec.states = {{0.8, 0.4, 1.0, 0.0}, {0.4, 0.8, 1.0, -0.12345678901234567}};

  const auto tmp = std::filesystem::temp_directory_path() / "stablewalk_model_rt.json";
  save_model_spec(spec, tmp.string());
  const auto loaded = load_model_spec(tmp.string());
  CHECK(model_spec_bytes(loaded) == model_spec_bytes(spec));
  const auto tmp2 = std::filesystem::temp_directory_path() / "stablewalk_model_rt2.json";
  save_model_spec(loaded, tmp2.string());
  const auto reloaded = load_model_spec(tmp2.string());
  CHECK(model_spec_bytes(reloaded) == model_spec_bytes(spec));
  CHECK(reloaded.states[1].center == spec.states[1].center);
  std::filesystem::remove(tmp);
  std::filesystem::remove(tmp2);
}
