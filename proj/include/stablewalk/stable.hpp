#pragma once

#include <cstdint>
#include <vector>

#include "stablewalk/rng.hpp"

namespace stablewalk {

// Closed form for P(Z > 0) of a strictly alpha-stable law:
// rho = 1/2 + arctan(beta * tan(pi*alpha/2)) / (pi*alpha).
double positivity_parameter(double alpha, double beta);

// Strictly stable law, alpha in (1,2]. alpha = 2 is admitted as a Gaussian
// sanity endpoint (variance 2*scale^2) and flagged degenerate.
struct StableParams {
  double alpha;
  double beta;
  double scale;

  StableParams(double alpha_, double beta_, double scale_ = 1.0);

  double rho() const { return positivity_parameter(alpha, beta); }
  bool gaussian_endpoint() const { return alpha == 2.0; }
};

// One draw by the Chambers-Mallows-Stuck transform (strictly stable
// parameterization, alpha != 1). Consumes two uniforms per accepted draw.
double sample_standard_stable(const StableParams& params, RngStream& rng);

// Batch of independent draws, one substream per index.
std::vector<double> sample_stable_batch(const StableParams& params, std::int64_t count,
                                        std::uint64_t seed, int workers);
std::vector<double> sample_stable_batch_serial(const StableParams& params,
                                               std::int64_t count, std::uint64_t seed);

// Cumulative sums of i.i.d. stable increments scaled by (horizon/steps)^{1/alpha}.
std::vector<double> sample_stable_path(const StableParams& params, std::int64_t steps,
                                       double horizon, RngStream& rng);

struct StableSurvivalRow {
  double t;
  double p_hat;
  double stderr_;
  std::int64_t survivors;
};

struct StableSurvivalTable {
  std::vector<StableSurvivalRow> rows;
  std::int64_t paths = 0;
  double y = 0.0;
};

// Fraction of discretized stable paths with y + Z(s) > 0 at every grid point
// s <= t. Positivity is checked at grid points only; jump overshoot between
// grid points is ignored (discretization bias).
StableSurvivalTable stable_survival_estimate(const StableParams& params, double y,
                                             const std::vector<double>& t_grid,
                                             int steps_per_unit, std::int64_t paths,
                                             std::uint64_t seed, int workers);
StableSurvivalTable stable_survival_estimate_serial(const StableParams& params, double y,
                                                    const std::vector<double>& t_grid,
                                                    int steps_per_unit, std::int64_t paths,
                                                    std::uint64_t seed);

struct MeanderSample {
  double value;  // endpoint of a positivity-conditioned discretized path
  std::int64_t grid_steps;
};

struct MeanderBatch {
  std::vector<MeanderSample> samples;
  std::int64_t grid_steps = 0;
  std::int64_t attempts = 0;
  double acceptance_rate = 0.0;

  std::vector<double> values() const;
};

// Rejection sampling of the discretized stable meander endpoint: paths on
// {k/grid_steps} are accepted iff every partial position is positive.
// Throws StatisticalAbort when the observed acceptance rate over a probe
// batch of attempts falls below `acceptance_floor`.
MeanderBatch sample_meander_endpoints(const StableParams& params, std::int64_t grid_steps,
                                      std::int64_t count, std::uint64_t seed, int workers,
                                      double acceptance_floor = 1e-6);
MeanderBatch sample_meander_endpoints_serial(const StableParams& params,
                                             std::int64_t grid_steps, std::int64_t count,
                                             std::uint64_t seed,
                                             double acceptance_floor = 1e-6);

}  // namespace stablewalk
