#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stablewalk/chain.hpp"
#include "stablewalk/decomp.hpp"
#include "stablewalk/stable.hpp"

namespace stablewalk {

struct ExitConfig {
  int j0 = 0;
  double y = 1.0;
  std::vector<std::int64_t> n_grid;
  std::int64_t paths = 0;
  std::uint64_t seed = 0;
  int workers = 0;

  void validate(const ChainModel& model) const;
};

struct SurvivalRow {
  std::int64_t n;
  double p_hat;
  double stderr_;
  std::int64_t survivors;
};

struct SurvivalTable {
  double y = 0.0;
  std::int64_t paths = 0;
  std::vector<SurvivalRow> rows;
};

// Fraction of paths with min_{k<=n}(y + S_k) > 0 for every n in the grid,
// evaluated on shared trajectories so p_hat is nonincreasing in n exactly.
// Increments do not depend on y, so runs sharing a seed are pathwise coupled
// across levels.
SurvivalTable estimate_survival(const ChainModel& model, const ExitConfig& cfg);
SurvivalTable estimate_survival_serial(const ChainModel& model, const ExitConfig& cfg);

// Shared-path scan over several starting levels at once (one table per level,
// in input order).
std::vector<SurvivalTable> estimate_survival_levels(const ChainModel& model, int j0,
                                                    const std::vector<double>& y_levels,
                                                    const std::vector<std::int64_t>& n_grid,
                                                    std::int64_t paths, std::uint64_t seed,
                                                    int workers,
                                                    std::uint64_t index_offset = 0);

struct ExponentFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;  // log-space
  std::int64_t rows_used = 0;
};

// Weighted log-log fit of p_hat against n over rows with n >= n_min.
// Rows with zero survivors are excluded.
ExponentFit fit_exponent(const SurvivalTable& table, std::int64_t n_min);

struct ScaleCalibration {
  double ell = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t n_cal = 0;
};

// Normalizing constant ell matching the interquartile range of
// S_{n_cal} / n_cal^{1/alpha} to that of the reference stable law
// (alpha, skew_beta). Percentile-bootstrap CI.
ScaleCalibration calibrate_scale(const ChainModel& model, std::int64_t n_cal,
                                 std::int64_t paths, std::uint64_t seed, int workers);

// Core of the calibration, usable on externally produced endpoint samples.
ScaleCalibration calibrate_scale_from_samples(std::span<const double> scaled_endpoints,
                                              const StableParams& reference,
                                              std::uint64_t seed);

struct HarmonicEstimate {
  double v_hat = 0.0;
  std::int64_t n_used = 0;
  double lo = 0.0;  // 3-sigma band
  double hi = 0.0;
  double scale_ell = 0.0;
  double stderr_ = 0.0;
  std::int64_t survivors = 0;
};

// v_hat = n^{1-rho} * ell * p_hat(n). Pass ell <= 0 to calibrate internally.
HarmonicEstimate estimate_harmonic(const ChainModel& model, int j0, double y, std::int64_t n,
                                   std::int64_t paths, std::uint64_t seed, int workers,
                                   double ell = 0.0);

// Estimates of v_hat over (hidden state, y-level) cells with monotone
// interpolation in log y. Above the grid the tabulated growth law
// h(j) * y^{alpha(1-rho)} anchored at the last cell is used; below the grid
// the same power law anchored at the first cell.
class HarmonicTable {
 public:
  enum class Region { kBelow, kInterior, kAbove };

  HarmonicTable() = default;
  static HarmonicTable constant(double value, int states);

  double eval(int state, double y, Region* region = nullptr) const;
  double eval_se(int state, double y) const;

  int states() const { return static_cast<int>(v_.size()); }
  const std::vector<double>& y_grid() const { return y_grid_; }
  double cell_v(int state, std::size_t yi) const { return v_[static_cast<std::size_t>(state)][yi]; }
  double cell_se(int state, std::size_t yi) const { return se_[static_cast<std::size_t>(state)][yi]; }
  std::int64_t cell_survivors(int state, std::size_t yi) const {
    return survivors_[static_cast<std::size_t>(state)][yi];
  }

  double ell = 0.0;
  double rho = 0.0;
  double growth_exponent = 0.0;  // alpha * (1 - rho)
  std::int64_t n = 0;
  std::int64_t paths = 0;

 private:
  friend HarmonicTable tabulate_harmonic(const ChainModel&, const std::vector<double>&,
                                         std::int64_t, std::int64_t, double, std::uint64_t,
                                         int);
  std::vector<double> y_grid_;
  std::vector<std::vector<double>> v_;
  std::vector<std::vector<double>> se_;
  std::vector<std::vector<std::int64_t>> survivors_;
  std::vector<double> h_anchor_;
};

HarmonicTable tabulate_harmonic(const ChainModel& model, const std::vector<double>& y_grid,
                                std::int64_t n, std::int64_t paths, double ell,
                                std::uint64_t seed, int workers);

struct GrowthFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double h_hat = 0.0;  // exp(intercept)
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  std::vector<double> y_used;
  std::vector<std::string> warnings;
};

// Regression of log v_hat on log y over a geometric grid; the slope estimates
// alpha * (1 - rho). Starved cells and cells with p_hat near 1 are dropped
// with a warning.
GrowthFit harmonic_growth_fit(const ChainModel& model, int j0,
                              const std::vector<double>& y_grid, std::int64_t n,
                              std::int64_t paths, std::uint64_t seed, int workers,
                              double ell = 0.0);

struct HarmonicityReport {
  int j0 = 0;
  double y = 0.0;
  double v_lhs = 0.0;
  double se_lhs = 0.0;
  double e_rhs = 0.0;
  double se_rhs_mc = 0.0;
  double se_rhs_table = 0.0;
  double residual = 0.0;      // v_lhs - e_rhs
  double residual_rel = 0.0;  // residual / v_lhs
  double combined_se = 0.0;
  double extrapolation_fraction = 0.0;
  std::int64_t mc_draws = 0;

  bool within(double k_sigma) const;
};

// One-step harmonicity: compares table(x, y) against the Monte Carlo
// expectation of table(X_1, y + S_1) on survival of the first step.
HarmonicityReport check_harmonicity(const ChainModel& model, const HarmonicTable& table,
                                    int j0, double y, std::int64_t mc_draws,
                                    std::uint64_t seed, int workers);

struct ConditionedEndpoints {
  std::vector<double> values;  // S_n / (n^{1/alpha} * ell) on {tau_y > n}
  std::int64_t attempts = 0;
  double acceptance_rate = 0.0;
  double ell = 0.0;
  std::int64_t n = 0;
};

ConditionedEndpoints conditioned_endpoint_samples(const ChainModel& model, int j0, double y,
                                                  std::int64_t n, std::int64_t count,
                                                  std::uint64_t seed, int workers,
                                                  double ell = 0.0,
                                                  double acceptance_floor = 1e-6);
ConditionedEndpoints conditioned_endpoint_samples_serial(const ChainModel& model, int j0,
                                                         double y, std::int64_t n,
                                                         std::int64_t count,
                                                         std::uint64_t seed,
                                                         double ell = 0.0,
                                                         double acceptance_floor = 1e-6);

struct SandwichResult {
  std::int64_t survivors_lower = 0;  // martingale min above +2 K_n
  std::int64_t survivors_walk = 0;   // true walk survival
  std::int64_t survivors_upper = 0;  // martingale min above -2 K_n
  std::int64_t violations = 0;       // paths breaking the pathwise inclusions
  std::int64_t paths = 0;
};

// Pathwise exit-time comparison: with K_n the running max of |r(X_k)| and M
// the martingale part, {min(y+M) > 2K_n} <= {tau_y > n} <= {min(y+M) > -2K_n}
// must hold path by path.
SandwichResult sandwich_check(const ChainModel& model, const PoissonSolution& solution,
                              int j0, double y, std::int64_t n, std::int64_t paths,
                              std::uint64_t seed, int workers);

}  // namespace stablewalk
