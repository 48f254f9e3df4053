#pragma once

#include <cstdint>
#include <vector>

#include "stablewalk/chain.hpp"

namespace stablewalk {

// Solution of (I - P)Theta = f - nu(f) on the pair space (state, increment).
// Because increments are emitted by the state a step leaves from, the
// solution reduces to Theta(j, xi) = xi + theta_state(j) - nu_f where the
// state part solves (I - P) h = m - nu(f) on hidden states (m = per-state
// conditional mean), normalized by pi . h = 0. The remainder r = P Theta
// depends on the hidden state only.
struct PoissonSolution {
  std::vector<double> theta_state;
  std::vector<double> r_state;
  double residual_inf = 0.0;  // sup-norm of (I-P)h - (m - nu_f), exact algebra
  double nu_f = 0.0;          // stationary mean of increments

  double theta(int state, double increment) const {
    return increment + theta_state[static_cast<std::size_t>(state)] - nu_f;
  }
  double remainder(int state) const { return r_state[static_cast<std::size_t>(state)]; }
};

// Dense route: rank-one-corrected linear system (I - P + e pi^T) h = m - nu.
PoissonSolution solve_poisson(const ChainModel& model);

// Spectral-gap route: h = sum_k P^k (m - nu), truncated when the term's
// sup-norm drops below `tol`. Kept as an independent cross-check of the
// dense solve.
std::vector<double> poisson_state_part_neumann(const ChainModel& model, double tol = 1e-14,
                                               int max_terms = 1000000);

struct MartingaleView {
  std::vector<double> xi;  // martingale increments
  std::vector<double> m;   // their partial sums
};

// Increments Theta(X_k) - (P Theta)(X_{k-1}) along a path, so that
// S_n = M_n + r(X_0) - r(X_n) holds pathwise up to rounding.
MartingaleView martingale_view(const PoissonSolution& solution, const WalkPath& path);

struct RemainderSupRow {
  std::int64_t n;
  double normalized_max_mean;  // E[max_{1<=k<=n} |r(X_k)|] / n^{1/alpha}
};

std::vector<RemainderSupRow> remainder_sup_check(const PoissonSolution& solution,
                                                 const ChainModel& model, int j0,
                                                 const std::vector<std::int64_t>& n_grid,
                                                 std::int64_t paths, std::uint64_t seed,
                                                 int workers);

struct MomentStabilityReport {
  double p = 0.0;  // moment order, (1 + alpha)/2
  std::vector<std::int64_t> window_ends;
  std::vector<double> window_moments;  // running mean of |xi_k|^p up to each end
  double max_ratio = 0.0;              // max/min across windows
};

// Finite-sample stability of E|xi_k|^p at p = (1+alpha)/2 < alpha: the
// running p-th absolute moment over dyadic windows should flatten out.
MomentStabilityReport moment_stability_check(const PoissonSolution& solution,
                                             const ChainModel& model, int j0,
                                             std::int64_t n, std::int64_t paths,
                                             std::uint64_t seed, int workers);

}  // namespace stablewalk
