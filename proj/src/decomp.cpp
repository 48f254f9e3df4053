#include "stablewalk/decomp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "stablewalk/errors.hpp"
#include "stablewalk/parallel.hpp"

namespace stablewalk {

namespace {

std::vector<double> conditional_means(const ChainModel& model) {
  std::vector<double> m(static_cast<std::size_t>(model.num_states()));
  for (int j = 0; j < model.num_states(); ++j)
    m[static_cast<std::size_t>(j)] = model.laws[static_cast<std::size_t>(j)].mean();
  return m;
}

std::vector<double> apply_transition(const TransitionMatrix& p, const std::vector<double>& v) {
  const int n = static_cast<int>(p.size());
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      s += p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

}  // namespace

PoissonSolution solve_poisson(const ChainModel& model) {
  if (!(model.gap > 0.0)) throw ConfigError("solve_poisson: model has no spectral gap");
  const int n = model.num_states();
  const auto m = conditional_means(model);

  double nu = 0.0;
  for (int j = 0; j < n; ++j) nu += model.pi[static_cast<std::size_t>(j)] * m[static_cast<std::size_t>(j)];

  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double pij = model.transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      a(i, j) = (i == j ? 1.0 : 0.0) - pij + model.pi[static_cast<std::size_t>(j)];
    }
    b(i) = m[static_cast<std::size_t>(i)] - nu;
  }
  const Eigen::VectorXd h = a.partialPivLu().solve(b);

  PoissonSolution sol;
  sol.nu_f = nu;
  sol.theta_state.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) sol.theta_state[static_cast<std::size_t>(j)] = h(j);

  const auto ph = apply_transition(model.transition, sol.theta_state);
  sol.r_state.resize(static_cast<std::size_t>(n));
  double residual = 0.0;
  for (int j = 0; j < n; ++j) {
    sol.r_state[static_cast<std::size_t>(j)] = m[static_cast<std::size_t>(j)] + ph[static_cast<std::size_t>(j)] - nu;
    const double res = sol.theta_state[static_cast<std::size_t>(j)] - ph[static_cast<std::size_t>(j)] -
                       (m[static_cast<std::size_t>(j)] - nu);
    residual = std::max(residual, std::abs(res));
  }
  sol.residual_inf = residual;
  return sol;
}

std::vector<double> poisson_state_part_neumann(const ChainModel& model, double tol,
                                               int max_terms) {
  const int n = model.num_states();
  const auto m = conditional_means(model);
  double nu = 0.0;
  for (int j = 0; j < n; ++j) nu += model.pi[static_cast<std::size_t>(j)] * m[static_cast<std::size_t>(j)];

  std::vector<double> term(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) term[static_cast<std::size_t>(j)] = m[static_cast<std::size_t>(j)] - nu;
  std::vector<double> h(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < max_terms; ++k) {
    double norm = 0.0;
    for (int j = 0; j < n; ++j) {
      h[static_cast<std::size_t>(j)] += term[static_cast<std::size_t>(j)];
      norm = std::max(norm, std::abs(term[static_cast<std::size_t>(j)]));
    }
    if (norm < tol) return h;
    term = apply_transition(model.transition, term);
  }
  throw ConfigError("poisson_state_part_neumann: series did not converge; invalid model");
}

MartingaleView martingale_view(const PoissonSolution& solution, const WalkPath& path) {
  const std::size_t n = path.increments.size();
  if (path.hidden_states.size() != n + 1 || path.partial_sums.size() != n)
    throw ConfigError("martingale_view: malformed path");
  const int j_max = static_cast<int>(solution.theta_state.size());
  for (int j : path.hidden_states)
    if (j < 0 || j >= j_max) throw ConfigError("martingale_view: path state outside the model");

  MartingaleView view;
  view.xi.resize(n);
  view.m.resize(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double xi = solution.theta(path.hidden_states[k + 1], path.increments[k]) -
                      solution.remainder(path.hidden_states[k]);
    view.xi[k] = xi;
    acc += xi;
    view.m[k] = acc;
  }
  return view;
}

std::vector<RemainderSupRow> remainder_sup_check(const PoissonSolution& solution,
                                                 const ChainModel& model, int j0,
                                                 const std::vector<std::int64_t>& n_grid,
                                                 std::int64_t paths, std::uint64_t seed,
                                                 int workers) {
  if (n_grid.empty()) throw ConfigError("remainder_sup_check: empty n grid");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw ConfigError("remainder_sup_check: n grid must increase");
  if (paths < 1) throw ConfigError("remainder_sup_check: paths >= 1");
  if (j0 < 0 || j0 >= model.num_states()) throw ConfigError("remainder_sup_check: bad start state");

  const std::int64_t n_max = n_grid.back();
  const std::size_t g = n_grid.size();
  std::vector<double> slots(static_cast<std::size_t>(paths) * g, 0.0);

  parallel_for_index(paths, workers, [&](std::int64_t p) {
    auto rng = RngStream::substream(seed, salt::kRemainder, static_cast<std::uint64_t>(p));
    int state = j0;
    double running_max = 0.0;
    std::size_t gi = 0;
    for (std::int64_t k = 1; k <= n_max; ++k) {
      // Only the hidden chain matters for |r|; skip the increment draws.
      state = model.next_state(state, rng);
      running_max = std::max(running_max, std::abs(solution.remainder(state)));
      while (gi < g && n_grid[gi] == k) {
        slots[static_cast<std::size_t>(p) * g + gi] = running_max;
        ++gi;
      }
    }
  });

  std::vector<RemainderSupRow> rows(g);
  std::vector<double> column(static_cast<std::size_t>(paths));
  for (std::size_t i = 0; i < g; ++i) {
    for (std::int64_t p = 0; p < paths; ++p)
      column[static_cast<std::size_t>(p)] = slots[static_cast<std::size_t>(p) * g + i];
    const double mean = compensated_sum(column) / static_cast<double>(paths);
    rows[i].n = n_grid[i];
    rows[i].normalized_max_mean =
        mean / std::pow(static_cast<double>(n_grid[i]), 1.0 / model.alpha);
  }
  return rows;
}

MomentStabilityReport moment_stability_check(const PoissonSolution& solution,
                                             const ChainModel& model, int j0,
                                             std::int64_t n, std::int64_t paths,
                                             std::uint64_t seed, int workers) {
  if (n < 16) throw ConfigError("moment_stability_check: n too small");
  if (paths < 1) throw ConfigError("moment_stability_check: paths >= 1");

  MomentStabilityReport report;
  report.p = 0.5 * (1.0 + model.alpha);
  for (std::int64_t w = 16; w <= n; w *= 2) report.window_ends.push_back(w);
  if (report.window_ends.back() != n) report.window_ends.push_back(n);
  const std::size_t g = report.window_ends.size();

  std::vector<double> slots(static_cast<std::size_t>(paths) * g, 0.0);
  parallel_for_index(paths, workers, [&](std::int64_t pidx) {
    auto rng = RngStream::substream(seed, salt::kMoment, static_cast<std::uint64_t>(pidx));
    int state = j0;
    double acc = 0.0;
    std::size_t gi = 0;
    for (std::int64_t k = 1; k <= n; ++k) {
      const double increment = model.laws[static_cast<std::size_t>(state)].sample(rng);
      const int next = model.next_state(state, rng);
      const double xi = solution.theta(next, increment) - solution.remainder(state);
      state = next;
      acc += std::pow(std::abs(xi), report.p);
      while (gi < g && report.window_ends[gi] == k) {
        slots[static_cast<std::size_t>(pidx) * g + gi] = acc / static_cast<double>(k);
        ++gi;
      }
    }
  });

  report.window_moments.resize(g);
  std::vector<double> column(static_cast<std::size_t>(paths));
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::int64_t p = 0; p < paths; ++p)
      column[static_cast<std::size_t>(p)] = slots[static_cast<std::size_t>(p) * g + i];
    const double mean = compensated_sum(column) / static_cast<double>(paths);
    report.window_moments[i] = mean;
    if (i == 0) {
      lo = hi = mean;
    } else {
      lo = std::min(lo, mean);
      hi = std::max(hi, mean);
    }
  }
  report.max_ratio = (lo > 0.0) ? hi / lo : 0.0;
  return report;
}

}  // namespace stablewalk
