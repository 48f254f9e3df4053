#include "stablewalk/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stablewalk/errors.hpp"
#include "stablewalk/parallel.hpp"
#include "stablewalk/stats.hpp"

namespace stablewalk {

namespace {

double binomial_stderr(double p, std::int64_t n) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

void validate_n_grid(const std::vector<std::int64_t>& n_grid) {
  if (n_grid.empty()) throw ConfigError("n grid is empty");
  if (n_grid.front() < 1) throw ConfigError("n grid entries must be >= 1");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw ConfigError("n grid must be strictly increasing");
}

struct SortedLevels {
  std::vector<double> y_asc;
  std::vector<std::size_t> input_index;  // position in the caller's order
};

SortedLevels sort_levels(const std::vector<double>& y_levels) {
  if (y_levels.empty()) throw ConfigError("no exit levels given");
  for (double y : y_levels)
    if (!(y > 0.0)) throw ConfigError("exit levels must be positive");
  std::vector<std::size_t> order(y_levels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return y_levels[a] < y_levels[b]; });
  SortedLevels s;
  s.y_asc.reserve(y_levels.size());
  s.input_index = order;
  for (std::size_t i : order) {
    if (!s.y_asc.empty() && y_levels[i] == s.y_asc.back())
      throw ConfigError("duplicate exit level");
    s.y_asc.push_back(y_levels[i]);
  }
  return s;
}

// First-passage indices for every level of one path, written into
// taus[input_index[l]]. Levels die smallest-first as the running sum falls.
void scan_one_path(const ChainModel& model, int j0, const SortedLevels& levels,
                   std::int64_t n_max, RngStream& rng, std::int64_t* taus) {
  const std::size_t nl = levels.y_asc.size();
  for (std::size_t l = 0; l < nl; ++l) taus[levels.input_index[l]] = n_max + 1;
  int state = j0;
  double s = 0.0;
  std::size_t dead = 0;
  for (std::int64_t k = 1; k <= n_max; ++k) {
    s += model.laws[static_cast<std::size_t>(state)].sample(rng);
    state = model.next_state(state, rng);
    while (dead < nl && levels.y_asc[dead] + s <= 0.0) {
      taus[levels.input_index[dead]] = k;
      ++dead;
    }
    if (dead == nl) return;
  }
}

template <class ForIndex>
std::vector<std::int64_t> exit_scan(const ChainModel& model, int j0,
                                    const SortedLevels& levels, std::int64_t n_max,
                                    std::int64_t paths, std::uint64_t seed,
                                    std::uint64_t index_offset, ForIndex&& for_index) {
  const std::size_t nl = levels.y_asc.size();
  std::vector<std::int64_t> taus(static_cast<std::size_t>(paths) * nl);
  for_index(paths, [&](std::int64_t i) {
    auto rng = RngStream::substream(seed, salt::kWalk,
                                    index_offset + static_cast<std::uint64_t>(i));
    scan_one_path(model, j0, levels, n_max, rng,
                  taus.data() + static_cast<std::size_t>(i) * nl);
  });
  return taus;
}

std::vector<SurvivalTable> tables_from_taus(const std::vector<std::int64_t>& taus,
                                            std::size_t n_levels,
                                            const std::vector<double>& y_levels,
                                            const std::vector<std::int64_t>& n_grid,
                                            std::int64_t paths) {
  std::vector<SurvivalTable> tables(n_levels);
  for (std::size_t l = 0; l < n_levels; ++l) {
    tables[l].y = y_levels[l];
    tables[l].paths = paths;
    tables[l].rows.reserve(n_grid.size());
  }
  for (std::size_t l = 0; l < n_levels; ++l) {
    for (std::int64_t n : n_grid) {
      std::int64_t survivors = 0;
      for (std::int64_t p = 0; p < paths; ++p)
        if (taus[static_cast<std::size_t>(p) * n_levels + l] > n) ++survivors;
      const double phat = static_cast<double>(survivors) / static_cast<double>(paths);
      tables[l].rows.push_back({n, phat, binomial_stderr(phat, paths), survivors});
    }
  }
  return tables;
}

}  // namespace

void ExitConfig::validate(const ChainModel& model) const {
  if (j0 < 0 || j0 >= model.num_states()) throw ConfigError("ExitConfig: invalid start state");
  if (!(y > 0.0)) throw ConfigError("ExitConfig: y must be positive");
  validate_n_grid(n_grid);
  if (paths < 1000) throw ConfigError("ExitConfig: paths >= 1000 required");
}

SurvivalTable estimate_survival(const ChainModel& model, const ExitConfig& cfg) {
  cfg.validate(model);
  const auto levels = sort_levels({cfg.y});
  const auto taus = exit_scan(model, cfg.j0, levels, cfg.n_grid.back(), cfg.paths, cfg.seed, 0,
                              [&](std::int64_t c, auto&& fn) {
                                parallel_for_index(c, cfg.workers, fn);
                              });
  return tables_from_taus(taus, 1, {cfg.y}, cfg.n_grid, cfg.paths)[0];
}

SurvivalTable estimate_survival_serial(const ChainModel& model, const ExitConfig& cfg) {
  cfg.validate(model);
  const auto levels = sort_levels({cfg.y});
  const auto taus = exit_scan(model, cfg.j0, levels, cfg.n_grid.back(), cfg.paths, cfg.seed, 0,
                              [](std::int64_t c, auto&& fn) { serial_for_index(c, fn); });
  return tables_from_taus(taus, 1, {cfg.y}, cfg.n_grid, cfg.paths)[0];
}

std::vector<SurvivalTable> estimate_survival_levels(const ChainModel& model, int j0,
                                                    const std::vector<double>& y_levels,
                                                    const std::vector<std::int64_t>& n_grid,
                                                    std::int64_t paths, std::uint64_t seed,
                                                    int workers, std::uint64_t index_offset) {
  if (j0 < 0 || j0 >= model.num_states())
    throw ConfigError("estimate_survival_levels: invalid start state");
  validate_n_grid(n_grid);
  if (paths < 1000) throw ConfigError("estimate_survival_levels: paths >= 1000 required");
  const auto levels = sort_levels(y_levels);
  const auto taus = exit_scan(model, j0, levels, n_grid.back(), paths, seed, index_offset,
                              [&](std::int64_t c, auto&& fn) {
                                parallel_for_index(c, workers, fn);
                              });
  return tables_from_taus(taus, y_levels.size(), y_levels, n_grid, paths);
}

ExponentFit fit_exponent(const SurvivalTable& table, std::int64_t n_min) {
  std::vector<double> xs, ys, ws;
  for (const auto& row : table.rows) {
    if (row.n < n_min || row.survivors == 0) continue;
    xs.push_back(static_cast<double>(row.n));
    ys.push_back(row.p_hat);
    // var(log p) ~ (stderr / p)^2; zero-variance rows are patched below.
    const double se_log = row.stderr_ / row.p_hat;
    ws.push_back(se_log > 0.0 ? 1.0 / (se_log * se_log) : 0.0);
  }
  if (xs.size() < 4) throw ConfigError("fit_exponent: fewer than 4 usable rows");
  double max_w = 0.0;
  for (double w : ws) max_w = std::max(max_w, w);
  if (max_w == 0.0) {
    std::fill(ws.begin(), ws.end(), 1.0);
  } else {
    for (double& w : ws)
      if (w == 0.0) w = max_w;  // p_hat == 1 rows: as informative as the best row
  }
  const auto fit = loglog_fit(xs, ys, ws);
  ExponentFit out;
  out.slope = fit.slope;
  out.slope_stderr = fit.slope_stderr;
  out.intercept = fit.intercept;
  out.rows_used = static_cast<std::int64_t>(xs.size());
  return out;
}

namespace {

std::vector<double> walk_endpoints_scaled(const ChainModel& model, int j0, std::int64_t n,
                                          std::int64_t paths, std::uint64_t seed,
                                          int workers) {
  std::vector<double> out(static_cast<std::size_t>(paths));
  const double norm = std::pow(static_cast<double>(n), 1.0 / model.alpha);
  parallel_for_index(paths, workers, [&](std::int64_t i) {
    auto rng = RngStream::substream(seed, salt::kCalibrate, static_cast<std::uint64_t>(i));
    int state = j0;
    double s = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      s += model.laws[static_cast<std::size_t>(state)].sample(rng);
      state = model.next_state(state, rng);
    }
    out[static_cast<std::size_t>(i)] = s / norm;
  });
  return out;
}

double iqr(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return sample_quantile(values, 0.75) - sample_quantile(values, 0.25);
}

}  // namespace

ScaleCalibration calibrate_scale_from_samples(std::span<const double> scaled_endpoints,
                                              const StableParams& reference,
                                              std::uint64_t seed) {
  if (scaled_endpoints.size() < 100)
    throw ConfigError("calibrate_scale: need at least 100 endpoint samples");
  constexpr std::int64_t kRefCount = 200000;
  std::vector<double> ref(static_cast<std::size_t>(kRefCount));
  for (std::int64_t i = 0; i < kRefCount; ++i) {
    auto rng = RngStream::substream(seed, salt::kCalibrateRef, static_cast<std::uint64_t>(i));
    ref[static_cast<std::size_t>(i)] = sample_standard_stable(reference, rng);
  }
  const double ref_iqr = iqr(std::move(ref));
  if (!(ref_iqr > 0.0)) throw StatisticalAbort("calibrate_scale: degenerate reference IQR");

  ScaleCalibration cal;
  cal.ell = iqr(std::vector<double>(scaled_endpoints.begin(), scaled_endpoints.end())) / ref_iqr;
  const auto ci = bootstrap_ci(
      scaled_endpoints,
      [&](std::span<const double> resample) {
        return iqr(std::vector<double>(resample.begin(), resample.end())) / ref_iqr;
      },
      400, 0.95, seed);
  cal.lo = ci.first;
  cal.hi = ci.second;
  return cal;
}

ScaleCalibration calibrate_scale(const ChainModel& model, std::int64_t n_cal,
                                 std::int64_t paths, std::uint64_t seed, int workers) {
  if (n_cal < 1024) throw ConfigError("calibrate_scale: n_cal >= 1024 required");
  if (paths < 1000) throw ConfigError("calibrate_scale: paths >= 1000 required");
  const auto endpoints = walk_endpoints_scaled(model, 0, n_cal, paths, seed, workers);
  const StableParams reference(model.alpha, model.skew_beta, 1.0);
  auto cal = calibrate_scale_from_samples(endpoints, reference, seed);
  cal.n_cal = n_cal;
  return cal;
}

HarmonicEstimate estimate_harmonic(const ChainModel& model, int j0, double y, std::int64_t n,
                                   std::int64_t paths, std::uint64_t seed, int workers,
                                   double ell) {
  if (ell <= 0.0) {
    const std::int64_t n_cal = std::max<std::int64_t>(1024, std::min<std::int64_t>(n, 4096));
    ell = calibrate_scale(model, n_cal, std::min<std::int64_t>(paths, 200000), seed, workers).ell;
  }
  ExitConfig cfg;
  cfg.j0 = j0;
  cfg.y = y;
  cfg.n_grid = {n};
  cfg.paths = paths;
  cfg.seed = seed;
  cfg.workers = workers;
  const auto table = estimate_survival(model, cfg);
  const auto& row = table.rows.front();
  if (row.survivors < 100)
    throw StatisticalAbort("estimate_harmonic: survivor starvation (" +
                           std::to_string(row.survivors) + " survivors at n=" +
                           std::to_string(n) + ")");
  const double rho = model.rho();
  const double factor = std::pow(static_cast<double>(n), 1.0 - rho) * ell;
  HarmonicEstimate est;
  est.v_hat = factor * row.p_hat;
  est.stderr_ = factor * row.stderr_;
  est.n_used = n;
  est.lo = est.v_hat - 3.0 * est.stderr_;
  est.hi = est.v_hat + 3.0 * est.stderr_;
  est.scale_ell = ell;
  est.survivors = row.survivors;
  return est;
}

HarmonicTable HarmonicTable::constant(double value, int states) {
  HarmonicTable t;
  t.y_grid_ = {1.0, 2.0};
  t.v_.assign(static_cast<std::size_t>(states), {value, value});
  t.se_.assign(static_cast<std::size_t>(states), {0.0, 0.0});
  t.survivors_.assign(static_cast<std::size_t>(states), {0, 0});
  t.h_anchor_.assign(static_cast<std::size_t>(states), value);
  t.growth_exponent = 0.0;
  t.rho = 0.0;
  t.ell = 1.0;
  return t;
}

double HarmonicTable::eval(int state, double y, Region* region) const {
  const auto& v = v_[static_cast<std::size_t>(state)];
  if (!(y > 0.0)) {
    if (region) *region = Region::kBelow;
    return 0.0;
  }
  if (y <= y_grid_.front()) {
    if (region) *region = y < y_grid_.front() ? Region::kBelow : Region::kInterior;
    return v.front() * std::pow(y / y_grid_.front(), growth_exponent);
  }
  if (y >= y_grid_.back()) {
    if (region) *region = y > y_grid_.back() ? Region::kAbove : Region::kInterior;
    return h_anchor_[static_cast<std::size_t>(state)] * std::pow(y, growth_exponent);
  }
  if (region) *region = Region::kInterior;
  const auto it = std::upper_bound(y_grid_.begin(), y_grid_.end(), y);
  const std::size_t hi = static_cast<std::size_t>(it - y_grid_.begin());
  const std::size_t lo = hi - 1;
  const double t = (std::log(y) - std::log(y_grid_[lo])) /
                   (std::log(y_grid_[hi]) - std::log(y_grid_[lo]));
  if (v[lo] > 0.0 && v[hi] > 0.0)
    return std::exp((1.0 - t) * std::log(v[lo]) + t * std::log(v[hi]));
  return (1.0 - t) * v[lo] + t * v[hi];
}

double HarmonicTable::eval_se(int state, double y) const {
  const auto& se = se_[static_cast<std::size_t>(state)];
  if (!(y > 0.0)) return 0.0;
  if (y <= y_grid_.front()) return se.front() * std::pow(y / y_grid_.front(), growth_exponent);
  if (y >= y_grid_.back()) return se.back() * std::pow(y / y_grid_.back(), growth_exponent);
  const auto it = std::upper_bound(y_grid_.begin(), y_grid_.end(), y);
  const std::size_t hi = static_cast<std::size_t>(it - y_grid_.begin());
  const std::size_t lo = hi - 1;
  const double t = (std::log(y) - std::log(y_grid_[lo])) /
                   (std::log(y_grid_[hi]) - std::log(y_grid_[lo]));
  return (1.0 - t) * se[lo] + t * se[hi];
}

HarmonicTable tabulate_harmonic(const ChainModel& model, const std::vector<double>& y_grid,
                                std::int64_t n, std::int64_t paths, double ell,
                                std::uint64_t seed, int workers) {
  if (y_grid.size() < 2) throw ConfigError("tabulate_harmonic: need at least two y levels");
  for (std::size_t i = 1; i < y_grid.size(); ++i)
    if (y_grid[i] <= y_grid[i - 1])
      throw ConfigError("tabulate_harmonic: y grid must be strictly increasing");
  if (!(ell > 0.0)) throw ConfigError("tabulate_harmonic: ell must be positive");

  HarmonicTable table;
  table.y_grid_ = y_grid;
  table.ell = ell;
  table.rho = model.rho();
  table.growth_exponent = model.alpha * (1.0 - table.rho);
  table.n = n;
  table.paths = paths;
  const double factor = std::pow(static_cast<double>(n), 1.0 - table.rho) * ell;

  const int states = model.num_states();
  table.v_.resize(static_cast<std::size_t>(states));
  table.se_.resize(static_cast<std::size_t>(states));
  table.survivors_.resize(static_cast<std::size_t>(states));
  table.h_anchor_.resize(static_cast<std::size_t>(states));
  for (int j = 0; j < states; ++j) {
    const auto tables = estimate_survival_levels(
        model, j, y_grid, {n}, paths, seed, workers,
        static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(paths));
    auto& v = table.v_[static_cast<std::size_t>(j)];
    auto& se = table.se_[static_cast<std::size_t>(j)];
    auto& sv = table.survivors_[static_cast<std::size_t>(j)];
    for (const auto& t : tables) {
      const auto& row = t.rows.front();
      if (row.survivors == 0)
        throw StatisticalAbort("tabulate_harmonic: starved cell at state " + std::to_string(j) +
                               ", y=" + std::to_string(t.y));
      v.push_back(factor * row.p_hat);
      se.push_back(factor * row.stderr_);
      sv.push_back(row.survivors);
    }
    table.h_anchor_[static_cast<std::size_t>(j)] =
        v.back() / std::pow(y_grid.back(), table.growth_exponent);
  }
  return table;
}

GrowthFit harmonic_growth_fit(const ChainModel& model, int j0,
                              const std::vector<double>& y_grid, std::int64_t n,
                              std::int64_t paths, std::uint64_t seed, int workers,
                              double ell) {
  if (y_grid.size() < 5) throw ConfigError("harmonic_growth_fit: need >= 5 grid points");
  const double ratio = y_grid[1] / y_grid[0];
  for (std::size_t i = 1; i < y_grid.size(); ++i) {
    if (!(y_grid[i] > y_grid[i - 1]))
      throw ConfigError("harmonic_growth_fit: y grid must increase");
    if (std::abs(y_grid[i] / y_grid[i - 1] - ratio) > 1e-9 * ratio)
      throw ConfigError("harmonic_growth_fit: y grid must be geometric");
  }
  if (ell <= 0.0) {
    const std::int64_t n_cal = std::max<std::int64_t>(1024, std::min<std::int64_t>(n, 4096));
    ell = calibrate_scale(model, n_cal, std::min<std::int64_t>(paths, 200000), seed, workers).ell;
  }

  const auto tables = estimate_survival_levels(model, j0, y_grid, {n}, paths, seed, workers);
  const double rho = model.rho();
  const double factor = std::pow(static_cast<double>(n), 1.0 - rho) * ell;

  GrowthFit out;
  std::vector<double> xs, ys, ws;
  for (const auto& t : tables) {
    const auto& row = t.rows.front();
    if (row.survivors < 100) {
      out.warnings.push_back("dropped y=" + std::to_string(t.y) + ": only " +
                             std::to_string(row.survivors) + " survivors");
      continue;
    }
    if (row.p_hat > 0.95) {
      out.warnings.push_back("dropped y=" + std::to_string(t.y) +
                             ": p_hat near 1, pre-asymptotic");
      continue;
    }
    xs.push_back(t.y);
    ys.push_back(factor * row.p_hat);
    const double se_log = row.stderr_ / row.p_hat;
    ws.push_back(1.0 / (se_log * se_log));
    out.y_used.push_back(t.y);
  }
  if (xs.size() < 3)
    throw StatisticalAbort("harmonic_growth_fit: fewer than 3 usable levels after drops");
  const auto fit = loglog_fit(xs, ys, ws);
  out.slope = fit.slope;
  out.slope_stderr = fit.slope_stderr;
  out.h_hat = std::exp(fit.intercept);
  out.slope_lo = fit.slope - 3.0 * fit.slope_stderr;
  out.slope_hi = fit.slope + 3.0 * fit.slope_stderr;
  return out;
}

bool HarmonicityReport::within(double k_sigma) const {
  return std::abs(residual) <= k_sigma * combined_se;
}

HarmonicityReport check_harmonicity(const ChainModel& model, const HarmonicTable& table,
                                    int j0, double y, std::int64_t mc_draws,
                                    std::uint64_t seed, int workers) {
  if (j0 < 0 || j0 >= model.num_states()) throw ConfigError("check_harmonicity: bad state");
  if (!(y > 0.0)) throw ConfigError("check_harmonicity: y must be positive");
  if (mc_draws < 1000) throw ConfigError("check_harmonicity: mc_draws >= 1000");
  if (table.states() != model.num_states())
    throw ConfigError("check_harmonicity: table/model state mismatch");

  std::vector<double> value(static_cast<std::size_t>(mc_draws), 0.0);
  std::vector<double> point_se(static_cast<std::size_t>(mc_draws), 0.0);
  std::vector<unsigned char> above(static_cast<std::size_t>(mc_draws), 0);
  std::vector<unsigned char> alive(static_cast<std::size_t>(mc_draws), 0);

  parallel_for_index(mc_draws, workers, [&](std::int64_t i) {
    auto rng = RngStream::substream(seed, salt::kOneStep, static_cast<std::uint64_t>(i));
    const double xi = model.laws[static_cast<std::size_t>(j0)].sample(rng);
    const int j1 = model.next_state(j0, rng);
    const double y1 = y + xi;
    if (y1 > 0.0) {
      HarmonicTable::Region region;
      value[static_cast<std::size_t>(i)] = table.eval(j1, y1, &region);
      point_se[static_cast<std::size_t>(i)] = table.eval_se(j1, y1);
      alive[static_cast<std::size_t>(i)] = 1;
      above[static_cast<std::size_t>(i)] = region == HarmonicTable::Region::kAbove ? 1 : 0;
    }
  });

  std::int64_t n_alive = 0;
  std::int64_t n_above = 0;
  for (std::int64_t i = 0; i < mc_draws; ++i) {
    n_alive += alive[static_cast<std::size_t>(i)];
    n_above += above[static_cast<std::size_t>(i)];
  }
  if (n_alive == 0) throw StatisticalAbort("check_harmonicity: no surviving one-step draws");
  const double extrap = static_cast<double>(n_above) / static_cast<double>(n_alive);
  if (extrap > 0.5)
    throw StatisticalAbort("check_harmonicity: extrapolation fraction " +
                           std::to_string(extrap) + " exceeds 0.5; widen the y grid");

  HarmonicityReport report;
  report.j0 = j0;
  report.y = y;
  report.mc_draws = mc_draws;
  report.extrapolation_fraction = extrap;
  report.e_rhs = compensated_sum(value) / static_cast<double>(mc_draws);
  report.se_rhs_mc = sample_stddev(value) / std::sqrt(static_cast<double>(mc_draws));
  report.se_rhs_table = compensated_sum(point_se) / static_cast<double>(mc_draws);
  report.v_lhs = table.eval(j0, y);
  report.se_lhs = table.eval_se(j0, y);
  report.residual = report.v_lhs - report.e_rhs;
  report.residual_rel = report.v_lhs != 0.0 ? report.residual / report.v_lhs : 0.0;
  report.combined_se = std::sqrt(report.se_lhs * report.se_lhs +
                                 report.se_rhs_mc * report.se_rhs_mc +
                                 report.se_rhs_table * report.se_rhs_table);
  return report;
}

namespace {

// Endpoint of one conditioned attempt; alive=false when the walk exits.
struct AttemptOutcome {
  double endpoint = 0.0;
  bool alive = false;
};

AttemptOutcome conditioned_attempt(const ChainModel& model, int j0, double y, std::int64_t n,
                                   RngStream& rng) {
  int state = j0;
  double s = 0.0;
  for (std::int64_t k = 1; k <= n; ++k) {
    s += model.laws[static_cast<std::size_t>(state)].sample(rng);
    state = model.next_state(state, rng);
    if (y + s <= 0.0) return {};
  }
  return {s, true};
}

template <class ForIndex>
ConditionedEndpoints conditioned_impl(const ChainModel& model, int j0, double y,
                                      std::int64_t n, std::int64_t count, std::uint64_t seed,
                                      double ell, double acceptance_floor, int cal_workers,
                                      ForIndex&& for_index) {
  if (j0 < 0 || j0 >= model.num_states())
    throw ConfigError("conditioned_endpoint_samples: bad start state");
  if (!(y > 0.0)) throw ConfigError("conditioned_endpoint_samples: y must be positive");
  if (n < 1) throw ConfigError("conditioned_endpoint_samples: n >= 1");
  if (count < 1000) throw ConfigError("conditioned_endpoint_samples: count >= 1000 required");
  if (!(acceptance_floor > 0.0 && acceptance_floor < 1.0))
    throw ConfigError("conditioned_endpoint_samples: acceptance floor in (0,1)");
  if (ell <= 0.0) {
    const std::int64_t n_cal = std::max<std::int64_t>(1024, std::min<std::int64_t>(n, 4096));
    ell = calibrate_scale(model, n_cal, 100000, seed, cal_workers).ell;
  }

  const double norm = std::pow(static_cast<double>(n), 1.0 / model.alpha) * ell;
  const std::int64_t probe_batch =
      std::max<std::int64_t>(100000, static_cast<std::int64_t>(std::ceil(3.0 / acceptance_floor)));

  ConditionedEndpoints out;
  out.ell = ell;
  out.n = n;
  out.values.reserve(static_cast<std::size_t>(count));

  std::int64_t base = 0;
  std::int64_t block = std::max<std::int64_t>(4 * count, 4096);
  std::vector<double> endpoint;
  std::vector<unsigned char> alive;
  while (static_cast<std::int64_t>(out.values.size()) < count) {
    endpoint.assign(static_cast<std::size_t>(block), 0.0);
    alive.assign(static_cast<std::size_t>(block), 0);
    for_index(block, [&](std::int64_t i) {
      auto rng = RngStream::substream(seed, salt::kConditioned,
                                      static_cast<std::uint64_t>(base + i));
      const auto a = conditioned_attempt(model, j0, y, n, rng);
      endpoint[static_cast<std::size_t>(i)] = a.endpoint;
      alive[static_cast<std::size_t>(i)] = a.alive ? 1 : 0;
    });
    for (std::int64_t i = 0; i < block; ++i) {
      if (alive[static_cast<std::size_t>(i)]) {
        out.values.push_back(endpoint[static_cast<std::size_t>(i)] / norm);
        if (static_cast<std::int64_t>(out.values.size()) == count) {
          out.attempts = base + i + 1;
          break;
        }
      }
    }
    if (static_cast<std::int64_t>(out.values.size()) == count) break;
    base += block;
    const double rate = static_cast<double>(out.values.size()) / static_cast<double>(base);
    if (base >= probe_batch && rate < acceptance_floor)
      throw StatisticalAbort("conditioned_endpoint_samples: acceptance rate " +
                             std::to_string(rate) + " below floor after " +
                             std::to_string(base) + " attempts");
    block = std::min<std::int64_t>(block * 2, 1 << 20);
  }
  out.acceptance_rate =
      static_cast<double>(out.values.size()) / static_cast<double>(out.attempts);
  return out;
}

}  // namespace

ConditionedEndpoints conditioned_endpoint_samples(const ChainModel& model, int j0, double y,
                                                  std::int64_t n, std::int64_t count,
                                                  std::uint64_t seed, int workers, double ell,
                                                  double acceptance_floor) {
  return conditioned_impl(model, j0, y, n, count, seed, ell, acceptance_floor, workers,
                          [workers](std::int64_t c, auto&& fn) {
                            parallel_for_index(c, workers, fn);
                          });
}

ConditionedEndpoints conditioned_endpoint_samples_serial(const ChainModel& model, int j0,
                                                         double y, std::int64_t n,
                                                         std::int64_t count,
                                                         std::uint64_t seed, double ell,
                                                         double acceptance_floor) {
  return conditioned_impl(model, j0, y, n, count, seed, ell, acceptance_floor, 1,
                          [](std::int64_t c, auto&& fn) { serial_for_index(c, fn); });
}

SandwichResult sandwich_check(const ChainModel& model, const PoissonSolution& solution,
                              int j0, double y, std::int64_t n, std::int64_t paths,
                              std::uint64_t seed, int workers) {
  if (j0 < 0 || j0 >= model.num_states()) throw ConfigError("sandwich_check: bad start state");
  if (!(y > 0.0)) throw ConfigError("sandwich_check: y must be positive");
  if (n < 1 || paths < 1) throw ConfigError("sandwich_check: n, paths >= 1");

  // bit 0: lower event, bit 1: walk survival, bit 2: upper event
  std::vector<unsigned char> flags(static_cast<std::size_t>(paths), 0);
  parallel_for_index(paths, workers, [&](std::int64_t p) {
    auto rng = RngStream::substream(seed, salt::kWalk, static_cast<std::uint64_t>(p));
    int state = j0;
    double s = 0.0;
    double m = 0.0;
    double min_walk = y;
    double min_mart = y;
    double k_max = std::abs(solution.remainder(state));
    for (std::int64_t k = 1; k <= n; ++k) {
      const double xi = model.laws[static_cast<std::size_t>(state)].sample(rng);
      const int next = model.next_state(state, rng);
      s += xi;
      m += solution.theta(next, xi) - solution.remainder(state);
      state = next;
      min_walk = std::min(min_walk, y + s);
      min_mart = std::min(min_mart, y + m);
      k_max = std::max(k_max, std::abs(solution.remainder(state)));
    }
    unsigned char f = 0;
    if (min_mart > 2.0 * k_max) f |= 1;
    if (min_walk > 0.0) f |= 2;
    if (min_mart > -2.0 * k_max) f |= 4;
    flags[static_cast<std::size_t>(p)] = f;
  });

  SandwichResult result;
  result.paths = paths;
  for (unsigned char f : flags) {
    const bool lower = f & 1;
    const bool walk = f & 2;
    const bool upper = f & 4;
    result.survivors_lower += lower;
    result.survivors_walk += walk;
    result.survivors_upper += upper;
    if ((lower && !walk) || (walk && !upper)) ++result.violations;
  }
  return result;
}

}  // namespace stablewalk
