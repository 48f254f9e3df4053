#include "stablewalk/stable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "stablewalk/errors.hpp"
#include "stablewalk/parallel.hpp"

namespace stablewalk {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;

// tan(pi*alpha/2) with the Gaussian endpoint pinned to its analytic value.
double skew_tangent(double alpha) {
  if (alpha == 2.0) return 0.0;
  return std::tan(kHalfPi * alpha);
}

}  // namespace

double positivity_parameter(double alpha, double beta) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw ConfigError("positivity_parameter: alpha must be in (1,2]");
  if (!(beta >= -1.0 && beta <= 1.0)) throw ConfigError("positivity_parameter: beta must be in [-1,1]");
  if (alpha == 2.0) return 0.5;
  return 0.5 + std::atan(beta * skew_tangent(alpha)) / (kPi * alpha);
}

StableParams::StableParams(double alpha_, double beta_, double scale_)
    : alpha(alpha_), beta(beta_), scale(scale_) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw ConfigError("StableParams: alpha must be in (1,2]");
  if (!(beta >= -1.0 && beta <= 1.0)) throw ConfigError("StableParams: beta must be in [-1,1]");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("StableParams: scale must be positive");
  const double r = rho();
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("StableParams: derived rho outside (0,1)");
}

double sample_standard_stable(const StableParams& params, RngStream& rng) {
  const double tan_half = skew_tangent(params.alpha);
  const double shift = std::atan(params.beta * tan_half) / params.alpha;
  const double prefactor =
      std::pow(1.0 + params.beta * params.beta * tan_half * tan_half, 0.5 / params.alpha);
  const double exponent = (1.0 - params.alpha) / params.alpha;

  for (int tries = 0; tries < 100; ++tries) {
    const double u = kPi * (rng.next_open_unit() - 0.5);  // uniform (-pi/2, pi/2)
    const double w = rng.next_exp();
    const double a = params.alpha * (u + shift);
    const double x = prefactor * std::sin(a) / std::pow(std::cos(u), 1.0 / params.alpha) *
                     std::pow(std::cos(u - a) / w, exponent);
    if (std::isfinite(x)) return params.scale * x;
  }
  throw StatisticalAbort("sample_standard_stable: repeated non-finite draws");
}

std::vector<double> sample_stable_batch(const StableParams& params, std::int64_t count,
                                        std::uint64_t seed, int workers) {
  if (count < 0) throw ConfigError("sample_stable_batch: negative count");
  std::vector<double> out(static_cast<std::size_t>(count));
  parallel_for_index(count, workers, [&](std::int64_t i) {
    auto rng = RngStream::substream(seed, salt::kStableSample, static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] = sample_standard_stable(params, rng);
  });
  return out;
}

std::vector<double> sample_stable_batch_serial(const StableParams& params, std::int64_t count,
                                               std::uint64_t seed) {
  if (count < 0) throw ConfigError("sample_stable_batch_serial: negative count");
  std::vector<double> out(static_cast<std::size_t>(count));
  serial_for_index(count, [&](std::int64_t i) {
    auto rng = RngStream::substream(seed, salt::kStableSample, static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] = sample_standard_stable(params, rng);
  });
  return out;
}

std::vector<double> sample_stable_path(const StableParams& params, std::int64_t steps,
                                       double horizon, RngStream& rng) {
  if (steps < 1) throw ConfigError("sample_stable_path: steps >= 1 required");
  if (!(horizon > 0.0)) throw ConfigError("sample_stable_path: horizon must be positive");
  const double step_scale = std::pow(horizon / static_cast<double>(steps), 1.0 / params.alpha);
  std::vector<double> path(static_cast<std::size_t>(steps));
  double s = 0.0;
  for (std::int64_t k = 0; k < steps; ++k) {
    s += step_scale * sample_standard_stable(params, rng);
    path[static_cast<std::size_t>(k)] = s;
  }
  return path;
}

namespace {

// First grid index k (1-based) with y + Z(k/spu) <= 0, or n_steps+1 if the
// discretized path stays positive throughout.
std::int64_t stable_first_passage(const StableParams& params, double y,
                                  std::int64_t n_steps, double step_scale, RngStream& rng) {
  double s = 0.0;
  for (std::int64_t k = 1; k <= n_steps; ++k) {
    s += step_scale * sample_standard_stable(params, rng);
    if (y + s <= 0.0) return k;
  }
  return n_steps + 1;
}

template <class ForIndex>
StableSurvivalTable stable_survival_impl(const StableParams& params, double y,
                                         const std::vector<double>& t_grid,
                                         int steps_per_unit, std::int64_t paths,
                                         std::uint64_t seed, ForIndex&& for_index) {
  if (!(y > 0.0)) throw ConfigError("stable_survival_estimate: y must be positive");
  if (paths <= 0) throw ConfigError("stable_survival_estimate: paths must be positive");
  if (steps_per_unit < 1) throw ConfigError("stable_survival_estimate: steps_per_unit >= 1");
  if (t_grid.empty()) throw ConfigError("stable_survival_estimate: empty t grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) throw ConfigError("stable_survival_estimate: t grid must be positive");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
      throw ConfigError("stable_survival_estimate: t grid must be increasing");
  }

  const double spu = static_cast<double>(steps_per_unit);
  std::vector<std::int64_t> grid_index(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    grid_index[i] = static_cast<std::int64_t>(std::floor(t_grid[i] * spu + 1e-9));
  const std::int64_t n_steps = grid_index.back();
  const double step_scale = std::pow(1.0 / spu, 1.0 / params.alpha);

  std::vector<std::int64_t> taus(static_cast<std::size_t>(paths));
  for_index(paths, [&](std::int64_t i) {
    auto rng = RngStream::substream(seed, salt::kStableSurvival, static_cast<std::uint64_t>(i));
    taus[static_cast<std::size_t>(i)] =
        stable_first_passage(params, y, n_steps, step_scale, rng);
  });

  StableSurvivalTable table;
  table.paths = paths;
  table.y = y;
  table.rows.reserve(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    std::int64_t survivors = 0;
    for (std::int64_t tau : taus)
      if (tau > grid_index[i]) ++survivors;
    const double p = static_cast<double>(survivors) / static_cast<double>(paths);
    StableSurvivalRow row;
    row.t = t_grid[i];
    row.p_hat = p;
    row.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(paths));
    row.survivors = survivors;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace

StableSurvivalTable stable_survival_estimate(const StableParams& params, double y,
                                             const std::vector<double>& t_grid,
                                             int steps_per_unit, std::int64_t paths,
                                             std::uint64_t seed, int workers) {
  return stable_survival_impl(params, y, t_grid, steps_per_unit, paths, seed,
                              [workers](std::int64_t count, auto&& fn) {
                                parallel_for_index(count, workers, fn);
                              });
}

StableSurvivalTable stable_survival_estimate_serial(const StableParams& params, double y,
                                                    const std::vector<double>& t_grid,
                                                    int steps_per_unit, std::int64_t paths,
                                                    std::uint64_t seed) {
  return stable_survival_impl(params, y, t_grid, steps_per_unit, paths, seed,
                              [](std::int64_t count, auto&& fn) { serial_for_index(count, fn); });
}

std::vector<double> MeanderBatch::values() const {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.value);
  return v;
}

namespace {

// Endpoint of one meander attempt, or 0 when a partial position is <= 0.
// Accepted endpoints are strictly positive so 0 is a safe rejection marker.
double meander_attempt(const StableParams& params, std::int64_t grid_steps,
                       double step_scale, RngStream& rng) {
  double s = 0.0;
  for (std::int64_t k = 0; k < grid_steps; ++k) {
    s += step_scale * sample_standard_stable(params, rng);
    if (s <= 0.0) return 0.0;
  }
  return s;
}

template <class ForIndex>
MeanderBatch meander_impl(const StableParams& params, std::int64_t grid_steps,
                          std::int64_t count, std::uint64_t seed, double acceptance_floor,
                          ForIndex&& for_index) {
  if (grid_steps < 2) throw ConfigError("sample_meander_endpoints: grid_steps >= 2 required");
  if (count < 1) throw ConfigError("sample_meander_endpoints: count >= 1 required");
  if (!(acceptance_floor > 0.0 && acceptance_floor < 1.0))
    throw ConfigError("sample_meander_endpoints: acceptance floor in (0,1)");

  const double step_scale = std::pow(1.0 / static_cast<double>(grid_steps), 1.0 / params.alpha);
  const std::int64_t probe_batch =
      std::max<std::int64_t>(100000, static_cast<std::int64_t>(std::ceil(3.0 / acceptance_floor)));

  MeanderBatch batch;
  batch.grid_steps = grid_steps;
  batch.samples.reserve(static_cast<std::size_t>(count));

  std::int64_t base = 0;
  std::int64_t block = std::max<std::int64_t>(4 * count, 4096);
  std::vector<double> slots;
  while (static_cast<std::int64_t>(batch.samples.size()) < count) {
    slots.assign(static_cast<std::size_t>(block), 0.0);
    for_index(block, [&](std::int64_t i) {
      auto rng = RngStream::substream(seed, salt::kMeander,
                                      static_cast<std::uint64_t>(base + i));
      slots[static_cast<std::size_t>(i)] =
          meander_attempt(params, grid_steps, step_scale, rng);
    });
    for (std::int64_t i = 0; i < block; ++i) {
      if (slots[static_cast<std::size_t>(i)] > 0.0) {
        batch.samples.push_back({slots[static_cast<std::size_t>(i)], grid_steps});
        if (static_cast<std::int64_t>(batch.samples.size()) == count) {
          batch.attempts = base + i + 1;
          break;
        }
      }
    }
    if (static_cast<std::int64_t>(batch.samples.size()) == count) break;
    base += block;
    const double rate = static_cast<double>(batch.samples.size()) / static_cast<double>(base);
    if (base >= probe_batch && rate < acceptance_floor) {
      throw StatisticalAbort("sample_meander_endpoints: acceptance rate " +
                             std::to_string(rate) + " below floor after " +
                             std::to_string(base) + " attempts");
    }
    block = std::min<std::int64_t>(block * 2, 1 << 20);
  }
  batch.acceptance_rate =
      static_cast<double>(batch.samples.size()) / static_cast<double>(batch.attempts);
  return batch;
}

}  // namespace

MeanderBatch sample_meander_endpoints(const StableParams& params, std::int64_t grid_steps,
                                      std::int64_t count, std::uint64_t seed, int workers,
                                      double acceptance_floor) {
  return meander_impl(params, grid_steps, count, seed, acceptance_floor,
                      [workers](std::int64_t n, auto&& fn) { parallel_for_index(n, workers, fn); });
}

MeanderBatch sample_meander_endpoints_serial(const StableParams& params,
                                             std::int64_t grid_steps, std::int64_t count,
                                             std::uint64_t seed, double acceptance_floor) {
  return meander_impl(params, grid_steps, count, seed, acceptance_floor,
                      [](std::int64_t n, auto&& fn) { serial_for_index(n, fn); });
}

}  // namespace stablewalk
