#include "stablewalk/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stablewalk/csv.hpp"
#include "stablewalk/decomp.hpp"
#include "stablewalk/errors.hpp"
#include "stablewalk/stable.hpp"
#include "stablewalk/stats.hpp"
#include "stablewalk/survival.hpp"

namespace stablewalk {

namespace {

double section_number(const nlohmann::json& s, const char* key) {
  if (!s.contains(key) || !s[key].is_number())
    throw ConfigError(std::string("config: missing numeric field '") + key + "'");
  return s[key].get<double>();
}

std::int64_t section_int(const nlohmann::json& s, const char* key) {
  if (!s.contains(key) || !s[key].is_number_integer())
    throw ConfigError(std::string("config: missing integer field '") + key + "'");
  return s[key].get<std::int64_t>();
}

std::vector<std::int64_t> section_int_list(const nlohmann::json& s, const char* key) {
  if (!s.contains(key) || !s[key].is_array())
    throw ConfigError(std::string("config: missing list field '") + key + "'");
  return s[key].get<std::vector<std::int64_t>>();
}

std::string csv_samples(const std::vector<double>& values) {
  std::string out = "value\n";
  for (double v : values) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

std::string csv_survival(const SurvivalTable& table) {
  std::string out = "n,p_hat,stderr,survivors\n";
  for (const auto& row : table.rows) {
    out += format_int(row.n);
    out += ',';
    out += format_double(row.p_hat);
    out += ',';
    out += format_double(row.stderr_);
    out += ',';
    out += format_int(row.survivors);
    out += '\n';
  }
  return out;
}

std::vector<double> geometric_grid(double lo, double hi, int points_per_octave) {
  if (!(lo > 0.0 && hi > lo)) throw ConfigError("config: bad y grid bounds");
  if (points_per_octave < 1) throw ConfigError("config: points_per_octave >= 1");
  const double step = std::pow(2.0, 1.0 / points_per_octave);
  std::vector<double> grid;
  for (double y = lo; y < hi * (1.0 + 1e-12); y *= step) grid.push_back(y);
  if (grid.back() < hi * (1.0 - 1e-12)) grid.push_back(hi);
  return grid;
}

}  // namespace

RunArtifacts run_stable_sample(const nlohmann::json& section, std::uint64_t seed,
                               int workers) {
  const StableParams params(section_number(section, "alpha"), section_number(section, "beta"),
                            section.value("scale", 1.0));
  const std::int64_t count = section_int(section, "count");
  if (count < 0) throw ConfigError("stable_sample: count must be nonnegative");

  const auto draws = sample_stable_batch(params, count, seed, workers);

  RunArtifacts artifacts;
  artifacts.files.emplace_back("samples.csv", csv_samples(draws));
  artifacts.summary = {{"count", count},
                       {"alpha", params.alpha},
                       {"beta", params.beta},
                       {"scale", params.scale},
                       {"rho", params.rho()},
                       {"gaussian_endpoint", params.gaussian_endpoint()}};
  return artifacts;
}

RunArtifacts run_survival(const ModelSpec& spec, const nlohmann::json& section,
                          std::uint64_t seed, int workers) {
  const ChainModel model = spec.build();
  ExitConfig cfg;
  cfg.j0 = static_cast<int>(section.value("j0", 0));
  cfg.y = section_number(section, "y");
  cfg.n_grid = section_int_list(section, "n_grid");
  cfg.paths = section_int(section, "paths");
  cfg.seed = seed;
  cfg.workers = workers;
  const std::int64_t n_min = section.value("n_min_fit", cfg.n_grid.empty() ? 1 : cfg.n_grid.front());

  const auto table = estimate_survival(model, cfg);
  const auto fit = fit_exponent(table, n_min);
  const double rho = model.rho();

  RunArtifacts artifacts;
  artifacts.files.emplace_back("survival.csv", csv_survival(table));
  nlohmann::json fit_json = {{"slope", fit.slope},
                             {"slope_stderr", fit.slope_stderr},
                             {"intercept", fit.intercept},
                             {"rows_used", fit.rows_used},
                             {"n_min", n_min},
                             {"rho", rho},
                             {"target_slope", -(1.0 - rho)},
                             {"y", cfg.y},
                             {"j0", cfg.j0},
                             {"paths", cfg.paths}};
  artifacts.files.emplace_back("exponent_fit.json", fit_json.dump(2) + "\n");
  artifacts.summary = fit_json;
  return artifacts;
}

RunArtifacts run_harmonic(const ModelSpec& spec, const nlohmann::json& section,
                          std::uint64_t seed, int workers) {
  const ChainModel model = spec.build();
  const std::int64_t n = section_int(section, "n");
  const std::int64_t paths = section_int(section, "paths");
  const double y_min = section.value("table_y_min", 0.125);
  const double y_max = section.value("table_y_max", 128.0);
  const int per_octave = static_cast<int>(section.value("points_per_octave", 2));
  const std::int64_t mc_draws = section.value("mc_draws", std::int64_t{200000});
  std::vector<double> y_eval = {1.0, 2.0, 4.0};
  if (section.contains("y_eval")) y_eval = section["y_eval"].get<std::vector<double>>();
  std::vector<double> growth_y = {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
  if (section.contains("growth_y")) growth_y = section["growth_y"].get<std::vector<double>>();

  const std::int64_t n_cal =
      section.value("n_cal", std::max<std::int64_t>(1024, std::min<std::int64_t>(n, 4096)));
  const std::int64_t cal_paths =
      section.value("cal_paths", std::min<std::int64_t>(paths, 200000));
  const auto cal = calibrate_scale(model, n_cal, cal_paths, seed, workers);

  const auto y_grid = geometric_grid(y_min, y_max, per_octave);
  const auto table = tabulate_harmonic(model, y_grid, n, paths, cal.ell, seed, workers);

  std::string grid_csv = "j,y,v_hat,stderr,survivors\n";
  for (int j = 0; j < table.states(); ++j) {
    for (std::size_t yi = 0; yi < y_grid.size(); ++yi) {
      grid_csv += format_int(j);
      grid_csv += ',';
      grid_csv += format_double(y_grid[yi]);
      grid_csv += ',';
      grid_csv += format_double(table.cell_v(j, yi));
      grid_csv += ',';
      grid_csv += format_double(table.cell_se(j, yi));
      grid_csv += ',';
      grid_csv += format_int(table.cell_survivors(j, yi));
      grid_csv += '\n';
    }
  }

  nlohmann::json residual_rows = nlohmann::json::array();
  bool all_within = true;
  for (int j = 0; j < model.num_states(); ++j) {
    for (double y : y_eval) {
      const auto rep = check_harmonicity(model, table, j, y, mc_draws, seed, workers);
      const bool ok = rep.within(3.0);
      all_within = all_within && ok;
      residual_rows.push_back({{"j", j},
                               {"y", y},
                               {"v_lhs", rep.v_lhs},
                               {"se_lhs", rep.se_lhs},
                               {"e_rhs", rep.e_rhs},
                               {"se_rhs_mc", rep.se_rhs_mc},
                               {"se_rhs_table", rep.se_rhs_table},
                               {"residual", rep.residual},
                               {"residual_rel", rep.residual_rel},
                               {"combined_se", rep.combined_se},
                               {"ci_lo", rep.residual - 3.0 * rep.combined_se},
                               {"ci_hi", rep.residual + 3.0 * rep.combined_se},
                               {"extrapolation_fraction", rep.extrapolation_fraction},
                               {"within_3_sigma", ok}});
    }
  }
  nlohmann::json harmonicity = {{"rows", residual_rows},
                                {"mc_draws", mc_draws},
                                {"all_within_3_sigma", all_within},
                                {"ell", cal.ell},
                                {"n", n}};

  const int j0 = static_cast<int>(section.value("j0", 0));
  const std::int64_t growth_paths = section.value("growth_paths", paths);
  const auto growth =
      harmonic_growth_fit(model, j0, growth_y, n, growth_paths, seed, workers, cal.ell);
  const double target = model.alpha * (1.0 - model.rho());
  nlohmann::json growth_json = {{"slope", growth.slope},
                                {"slope_stderr", growth.slope_stderr},
                                {"slope_lo", growth.slope_lo},
                                {"slope_hi", growth.slope_hi},
                                {"h_hat", growth.h_hat},
                                {"target_exponent", target},
                                {"y_used", growth.y_used},
                                {"warnings", growth.warnings},
                                {"ell", cal.ell},
                                {"ell_ci", {cal.lo, cal.hi}},
                                {"j0", j0},
                                {"n", n}};

  RunArtifacts artifacts;
  artifacts.files.emplace_back("vhat_grid.csv", grid_csv);
  artifacts.files.emplace_back("harmonicity.json", harmonicity.dump(2) + "\n");
  artifacts.files.emplace_back("growth_fit.json", growth_json.dump(2) + "\n");
  artifacts.summary = {{"growth_slope", growth.slope},
                       {"target_exponent", target},
                       {"all_within_3_sigma", all_within},
                       {"ell", cal.ell}};
  return artifacts;
}

RunArtifacts run_meander(const ModelSpec& spec, const nlohmann::json& section,
                         std::uint64_t seed, int workers) {
  const ChainModel model = spec.build();
  const int j0 = static_cast<int>(section.value("j0", 0));
  const double y = section_number(section, "y");
  const std::int64_t n = section_int(section, "n");
  const std::int64_t count = section_int(section, "count");
  const std::int64_t grid_steps = section_int(section, "grid_steps");
  const double floor = section.value("acceptance_floor", 1e-6);

  const std::int64_t n_cal =
      section.value("n_cal", std::max<std::int64_t>(1024, std::min<std::int64_t>(n, 4096)));
  const std::int64_t cal_paths = section.value("cal_paths", std::int64_t{200000});
  const auto cal = calibrate_scale(model, n_cal, cal_paths, seed, workers);

  const auto walk =
      conditioned_endpoint_samples(model, j0, y, n, count, seed, workers, cal.ell, floor);
  const StableParams limit(model.alpha, model.skew_beta, 1.0);
  const auto meander = sample_meander_endpoints(limit, grid_steps, count, seed, workers, floor);

  const auto meander_values = meander.values();
  const auto ks = ks_two_sample(walk.values, meander_values);

  RunArtifacts artifacts;
  artifacts.files.emplace_back("walk_endpoints.csv", csv_samples(walk.values));
  artifacts.files.emplace_back("meander_endpoints.csv", csv_samples(meander_values));
  nlohmann::json ks_json = {{"ks_d", ks.statistic},
                            {"p_value", ks.p_value},
                            {"n_walk", ks.n_a},
                            {"n_meander", ks.n_b},
                            {"walk_acceptance_rate", walk.acceptance_rate},
                            {"walk_attempts", walk.attempts},
                            {"meander_acceptance_rate", meander.acceptance_rate},
                            {"meander_attempts", meander.attempts},
                            {"ell", cal.ell},
                            {"n", n},
                            {"grid_steps", grid_steps},
                            {"y", y}};
  artifacts.files.emplace_back("ks.json", ks_json.dump(2) + "\n");
  artifacts.summary = ks_json;
  return artifacts;
}

bool VerifyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : checks)
    rows.push_back({{"name", c.name},
                    {"tolerance", c.tolerance},
                    {"observed", c.observed},
                    {"pass", c.pass}});
  return {{"checks", rows}, {"all_pass", all_pass()}};
}

VerifyReport run_verify_checks(const nlohmann::json& raw_model,
                               const nlohmann::json& section, std::uint64_t seed,
                               int workers) {
  VerifyReport report;
  auto add = [&](const std::string& name, const std::string& tol, const std::string& obs,
                 bool pass) { report.checks.push_back({name, tol, obs, pass}); };

  const std::int64_t paths = section.value("paths", std::int64_t{2000});
  const std::int64_t n = section.value("n", std::int64_t{2048});
  const double y = section.value("y", 1.0);

  // Structural checks on the raw spec, before any build.
  double row_sum_err = 0.0;
  double min_entry = 0.0;
  bool square = true;
  if (raw_model.contains("transition") && raw_model["transition"].is_array()) {
    const auto& t = raw_model["transition"];
    const std::size_t nrows = t.size();
    for (const auto& row : t) {
      if (!row.is_array() || row.size() != nrows) square = false;
      double sum = 0.0;
      for (const auto& v : row) {
        const double x = v.get<double>();
        sum += x;
        min_entry = std::min(min_entry, x);
      }
      row_sum_err = std::max(row_sum_err, std::abs(sum - 1.0));
    }
  } else {
    square = false;
  }
  add("transition_square", "exact", square ? "square" : "not square", square);
  add("transition_row_stochastic", "1e-12", format_double(row_sum_err), row_sum_err <= 1e-12);
  add("transition_nonnegative", "exact", format_double(min_entry), min_entry >= 0.0);

  ModelSpec spec;
  ChainModel model;
  bool built = false;
  std::string build_error;
  try {
    spec = ModelSpec::from_json(raw_model);
    model = spec.build();
    built = true;
  } catch (const std::exception& e) {
    build_error = e.what();
  }
  add("model_build", "constructible", built ? "ok" : build_error, built);
  if (!built) return report;

  {
    double err = 0.0;
    const int ns = model.num_states();
    for (int j = 0; j < ns; ++j) {
      double s = 0.0;
      for (int i = 0; i < ns; ++i)
        s += model.pi[static_cast<std::size_t>(i)] *
             model.transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      err = std::max(err, std::abs(s - model.pi[static_cast<std::size_t>(j)]));
    }
    add("stationary_fixed_point", "1e-10", format_double(err), err <= 1e-10);

    double mean = 0.0;
    for (int j = 0; j < ns; ++j)
      mean += model.pi[static_cast<std::size_t>(j)] * model.laws[static_cast<std::size_t>(j)].mean();
    add("stationary_mean_centered", "1e-10", format_double(std::abs(mean)),
        std::abs(mean) <= 1e-10);

    const double lambda2 = second_eigenvalue_modulus_power(model.transition, model.pi);
    const double gap_err = std::abs(model.gap - (1.0 - lambda2));
    add("spectral_gap_cross_check", "1e-8", format_double(gap_err), gap_err <= 1e-8);
  }

  const auto sol = solve_poisson(model);
  add("poisson_residual", "1e-10", format_double(sol.residual_inf), sol.residual_inf <= 1e-10);
  {
    double dot = 0.0;
    for (int j = 0; j < model.num_states(); ++j)
      dot += model.pi[static_cast<std::size_t>(j)] * sol.theta_state[static_cast<std::size_t>(j)];
    add("poisson_normalization", "1e-10", format_double(std::abs(dot)), std::abs(dot) <= 1e-10);

    const auto h_series = poisson_state_part_neumann(model);
    double diff = 0.0;
    for (std::size_t j = 0; j < h_series.size(); ++j)
      diff = std::max(diff, std::abs(h_series[j] - sol.theta_state[j]));
    add("neumann_vs_dense_solve", "1e-10", format_double(diff), diff <= 1e-10);
  }

  {
    // Pathwise decomposition identity on a small batch.
    const std::int64_t id_paths = std::min<std::int64_t>(paths, 500);
    double worst = 0.0;
    for (std::int64_t p = 0; p < id_paths; ++p) {
      auto rng = RngStream::substream(seed, salt::kWalk, static_cast<std::uint64_t>(p));
      const auto path = simulate_walk(model, 0, n, rng);
      const auto view = martingale_view(sol, path);
      const double lhs = path.partial_sums.back();
      const double rhs = view.m.back() + sol.remainder(path.hidden_states.front()) -
                         sol.remainder(path.hidden_states.back());
      const double scale = std::max({std::abs(lhs), std::abs(rhs), 1.0});
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    add("decomposition_identity", "1e-9 relative", format_double(worst), worst <= 1e-9);
  }

  {
    const auto sandwich = sandwich_check(model, sol, 0, y, n, paths, seed, workers);
    add("exit_time_sandwich", "0 violations", format_int(sandwich.violations),
        sandwich.violations == 0);
  }

  {
    // Sampler symmetry at the model's tail index.
    const StableParams sym(model.alpha, 0.0, 1.0);
    const auto draws = sample_stable_batch(sym, 100000, seed, workers);
    std::vector<double> negated(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) negated[i] = -draws[i];
    const auto ks = ks_two_sample(draws, negated);
    const double crit = ks_critical_value(0.01, ks.effective_n());
    add("sampler_symmetry_ks", "D < " + format_double(crit), format_double(ks.statistic),
        ks.statistic < crit);
  }

  {
    ExitConfig cfg;
    cfg.j0 = 0;
    cfg.y = y;
    cfg.n_grid = {n / 8, n / 4, n / 2, n};
    cfg.paths = std::max<std::int64_t>(paths, 1000);
    cfg.seed = seed;
    cfg.workers = workers;
    const auto table = estimate_survival(model, cfg);
    bool monotone = true;
    for (std::size_t i = 1; i < table.rows.size(); ++i)
      monotone = monotone && table.rows[i].p_hat <= table.rows[i - 1].p_hat;
    add("survival_monotone_in_n", "exact", monotone ? "nonincreasing" : "violated", monotone);
  }

  return report;
}

}  // namespace stablewalk
