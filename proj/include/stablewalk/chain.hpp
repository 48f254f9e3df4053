#pragma once

#include <cstdint>
#include <vector>

#include "stablewalk/rng.hpp"

namespace stablewalk {

using TransitionMatrix = std::vector<std::vector<double>>;

// Two-sided Pareto increment law: density proportional to
//   weight_pos * x^{-alpha-1} on (cutoff, inf),
//   weight_neg * |x|^{-alpha-1} on (-inf, -cutoff),
// with a uniform core on [-cutoff, cutoff] carrying the remaining mass,
// the whole thing shifted by `center`.
struct ParetoIncrementLaw {
  double alpha;
  double weight_pos;
  double weight_neg;
  double cutoff;
  double center = 0.0;

  void validate() const;

  double tail_prob_pos() const;  // mass above cutoff (before the shift)
  double tail_prob_neg() const;
  double core_mass() const;

  double mean() const;
  double cdf(double x) const;

  // Consumes exactly two uniforms: one picks the mixture component, one is
  // inverted through the component CDF.
  double sample(RngStream& rng) const;
};

// Finite hidden-state Markov walk. The hidden chain J_k steps by `transition`;
// the increment at step k is drawn from the law of the state the step leaves
// from, so the conditional mean of a step is a function of the previous
// hidden state. Laws are recentred at construction by one global shift so the
// stationary mean of increments is zero.
struct ChainModel {
  TransitionMatrix transition;
  std::vector<ParetoIncrementLaw> laws;  // centered
  std::vector<double> pi;
  double alpha = 0.0;
  double skew_beta = 0.0;
  double gap = 0.0;

  int num_states() const { return static_cast<int>(transition.size()); }
  double rho() const;

  // Hidden-state transition by inverse CDF on the row; one uniform.
  int next_state(int state, RngStream& rng) const;
};

inline constexpr int kDefaultMaxStates = 64;

ChainModel build_model(TransitionMatrix transition, std::vector<ParetoIncrementLaw> raw_laws,
                       int max_states = kDefaultMaxStates);

// Unique left fixed point of an irreducible aperiodic row-stochastic matrix.
// Direct linear solve, verified against power iteration.
std::vector<double> stationary_distribution(const TransitionMatrix& transition);

// Modulus of the second-largest eigenvalue via power iteration on the
// projector-deflated operator. Independent of the dense eigensolver used by
// build_model; kept as a cross-check.
double second_eigenvalue_modulus_power(const TransitionMatrix& transition,
                                       const std::vector<double>& pi,
                                       int max_iters = 200000, double tol = 1e-12);

struct WalkPath {
  std::vector<int> hidden_states;    // J_0 .. J_n
  std::vector<double> increments;    // xi_1 .. xi_n
  std::vector<double> partial_sums;  // S_1 .. S_n
};

WalkPath simulate_walk(const ChainModel& model, int j0, std::int64_t n, RngStream& rng);

struct HillEstimate {
  double alpha_hat = 0.0;
  double stderr_ = 0.0;
  std::int64_t k_used = 0;
};

// Hill estimator over the top k order statistics of a positive sample.
HillEstimate hill_estimate(std::vector<double> abs_values, std::int64_t k);

// Hill tail-index check on |xi| from a stationary-start simulation.
HillEstimate hill_tail_check(const ChainModel& model, std::int64_t sample_size,
                             double k_fraction, std::uint64_t seed);

}  // namespace stablewalk
