#include "stablewalk/chain.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stablewalk/errors.hpp"
#include "stablewalk/stable.hpp"

namespace stablewalk {

namespace {

Eigen::MatrixXd to_eigen(const TransitionMatrix& transition) {
  const int n = static_cast<int>(transition.size());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void validate_row_stochastic(const TransitionMatrix& transition) {
  const std::size_t n = transition.size();
  if (n == 0) throw ConfigError("transition matrix is empty");
  for (std::size_t i = 0; i < n; ++i) {
    if (transition[i].size() != n) throw ConfigError("transition matrix is not square");
    double sum = 0.0;
    for (double v : transition[i]) {
      if (v < 0.0) throw ConfigError("transition matrix has a negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw ConfigError("transition row " + std::to_string(i) + " sums to " +
                        std::to_string(sum) + ", not 1");
  }
}

std::vector<std::vector<int>> positive_edges(const TransitionMatrix& transition) {
  const int n = static_cast<int>(transition.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0.0)
        adj[static_cast<std::size_t>(i)].push_back(j);
  return adj;
}

std::vector<int> bfs_levels(const std::vector<std::vector<int>>& adj, int start) {
  std::vector<int> level(adj.size(), -1);
  std::vector<int> queue{start};
  level[static_cast<std::size_t>(start)] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  return level;
}

void validate_irreducible_aperiodic(const TransitionMatrix& transition) {
  const int n = static_cast<int>(transition.size());
  if (n == 1) return;
  const auto adj = positive_edges(transition);
  std::vector<std::vector<int>> radj(static_cast<std::size_t>(n));
  for (int u = 0; u < n; ++u)
    for (int v : adj[static_cast<std::size_t>(u)]) radj[static_cast<std::size_t>(v)].push_back(u);

  const auto fwd = bfs_levels(adj, 0);
  const auto bwd = bfs_levels(radj, 0);
  for (int v = 0; v < n; ++v) {
    if (fwd[static_cast<std::size_t>(v)] < 0 || bwd[static_cast<std::size_t>(v)] < 0)
      throw ConfigError("chain is reducible: state " + std::to_string(v) +
                        " is not on a cycle through state 0");
  }

  // gcd of (level(u) + 1 - level(v)) over edges of a strongly connected graph
  // equals the chain period.
  int g = 0;
  for (int u = 0; u < n; ++u)
    for (int v : adj[static_cast<std::size_t>(u)]) {
      const int d = fwd[static_cast<std::size_t>(u)] + 1 - fwd[static_cast<std::size_t>(v)];
      g = std::gcd(g, std::abs(d));
    }
  if (g != 1) throw ConfigError("chain is periodic with period " + std::to_string(g));
}

}  // namespace

void ParetoIncrementLaw::validate() const {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw ConfigError("ParetoIncrementLaw: alpha must be in (1,2)");
  if (weight_pos < 0.0 || weight_neg < 0.0)
    throw ConfigError("ParetoIncrementLaw: tail weights must be nonnegative");
  if (!(weight_pos + weight_neg > 0.0))
    throw ConfigError("ParetoIncrementLaw: at least one tail weight must be positive");
  if (!(cutoff > 0.0)) throw ConfigError("ParetoIncrementLaw: cutoff must be positive");
  if (!std::isfinite(center)) throw ConfigError("ParetoIncrementLaw: center must be finite");
  const double tails = tail_prob_pos() + tail_prob_neg();
  if (tails > 1.0 + 1e-12)
    throw ConfigError("ParetoIncrementLaw: tail mass " + std::to_string(tails) +
                      " exceeds 1; shrink weights or raise cutoff");
}

double ParetoIncrementLaw::tail_prob_pos() const {
  return weight_pos * std::pow(cutoff, -alpha) / alpha;
}

double ParetoIncrementLaw::tail_prob_neg() const {
  return weight_neg * std::pow(cutoff, -alpha) / alpha;
}

double ParetoIncrementLaw::core_mass() const {
  return std::max(0.0, 1.0 - tail_prob_pos() - tail_prob_neg());
}

double ParetoIncrementLaw::mean() const {
  // The uniform core is symmetric, so only the tails contribute.
  return (weight_pos - weight_neg) * std::pow(cutoff, 1.0 - alpha) / (alpha - 1.0) + center;
}

double ParetoIncrementLaw::cdf(double x) const {
  const double z = x - center;
  const double qp = tail_prob_pos();
  const double qn = tail_prob_neg();
  if (z <= -cutoff) return qn * std::pow(-z / cutoff, -alpha);
  if (z >= cutoff) return 1.0 - qp * std::pow(z / cutoff, -alpha);
  return qn + core_mass() * (z + cutoff) / (2.0 * cutoff);
}

double ParetoIncrementLaw::sample(RngStream& rng) const {
  const double u = rng.next_unit();
  const double v = rng.next_open_unit();
  const double qp = tail_prob_pos();
  const double qn = tail_prob_neg();
  double x;
  if (u < qp) {
    x = cutoff * std::pow(v, -1.0 / alpha);
  } else if (u < qp + qn) {
    x = -cutoff * std::pow(v, -1.0 / alpha);
  } else {
    x = cutoff * (2.0 * v - 1.0);
  }
  return x + center;
}

double ChainModel::rho() const { return positivity_parameter(alpha, skew_beta); }

int ChainModel::next_state(int state, RngStream& rng) const {
  const auto& row = transition[static_cast<std::size_t>(state)];
  const double u = rng.next_unit();
  double acc = 0.0;
  const int n = static_cast<int>(row.size());
  for (int j = 0; j < n; ++j) {
    acc += row[static_cast<std::size_t>(j)];
    if (u < acc) return j;
  }
  return n - 1;
}

std::vector<double> stationary_distribution(const TransitionMatrix& transition) {
  validate_row_stochastic(transition);
  const int n = static_cast<int>(transition.size());
  if (n == 1) return {1.0};

  Eigen::MatrixXd p = to_eigen(transition);
  // Solve pi (P - I) = 0 with sum(pi) = 1: transpose system, replace one row.
  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j < n; ++j) a(n - 1, j) = 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd x = a.partialPivLu().solve(b);

  std::vector<double> pi(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (x(i) < -1e-10)
      throw ConfigError("stationary_distribution: negative component; chain may be reducible");
    pi[static_cast<std::size_t>(i)] = std::max(0.0, x(i));
    sum += pi[static_cast<std::size_t>(i)];
  }
  for (double& v : pi) v /= sum;

  // Power-iteration verification; divergence flags a reducible or periodic chain.
  std::vector<double> v(static_cast<std::size_t>(n), 1.0 / n), next(static_cast<std::size_t>(n));
  bool converged = false;
  for (int iter = 0; iter < 200000 && !converged; ++iter) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        s += v[static_cast<std::size_t>(i)] * transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(j)] = s;
    }
    double delta = 0.0;
    for (int j = 0; j < n; ++j)
      delta = std::max(delta, std::abs(next[static_cast<std::size_t>(j)] - v[static_cast<std::size_t>(j)]));
    v = next;
    converged = delta < 1e-14;
  }
  if (!converged)
    throw ConfigError("stationary_distribution: power iteration did not converge; chain may be reducible or periodic");
  for (int j = 0; j < n; ++j) {
    if (std::abs(v[static_cast<std::size_t>(j)] - pi[static_cast<std::size_t>(j)]) > 1e-10)
      throw ConfigError("stationary_distribution: linear solve and power iteration disagree");
  }
  return pi;
}

double second_eigenvalue_modulus_power(const TransitionMatrix& transition,
                                       const std::vector<double>& pi, int max_iters,
                                       double tol) {
  const int n = static_cast<int>(transition.size());
  if (n == 1) return 0.0;
  // Deflate the dominant pair: Q = P - e pi^T has spectrum {0, lambda_2, ...}.
  std::vector<double> v(static_cast<std::size_t>(n)), next(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = (i % 2 == 0) ? 1.0 : -0.5;
  double modulus = 0.0;
  double prev_modulus = -1.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    double dot_pi = 0.0;
    for (int j = 0; j < n; ++j) dot_pi += pi[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j)
        s += transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = s - dot_pi;
    }
    double norm = 0.0;
    for (double x : next) norm = std::max(norm, std::abs(x));
    if (norm == 0.0) return 0.0;
    modulus = norm;  // v was sup-normalized, so the growth factor is |lambda_2|
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = next[static_cast<std::size_t>(i)] / norm;
    if (iter > 32 && std::abs(modulus - prev_modulus) < tol) break;
    prev_modulus = modulus;
  }
  return modulus;
}

ChainModel build_model(TransitionMatrix transition, std::vector<ParetoIncrementLaw> raw_laws,
                       int max_states) {
  validate_row_stochastic(transition);
  const int n = static_cast<int>(transition.size());
  if (n > max_states)
    throw ConfigError("build_model: " + std::to_string(n) + " states exceeds cap of " +
                      std::to_string(max_states));
  if (static_cast<int>(raw_laws.size()) != n)
    throw ConfigError("build_model: need one increment law per state");
  for (const auto& law : raw_laws) law.validate();
  for (std::size_t i = 1; i < raw_laws.size(); ++i) {
    if (raw_laws[i].alpha != raw_laws[0].alpha)
      throw ConfigError("build_model: all states must share one tail index alpha");
  }
  validate_irreducible_aperiodic(transition);

  ChainModel model;
  model.alpha = raw_laws[0].alpha;
  model.pi = stationary_distribution(transition);

  // One global additive shift so the stationary mean of increments is zero.
  double stationary_mean = 0.0;
  for (int j = 0; j < n; ++j)
    stationary_mean += model.pi[static_cast<std::size_t>(j)] * raw_laws[static_cast<std::size_t>(j)].mean();
  for (auto& law : raw_laws) law.center -= stationary_mean;

  double w_diff = 0.0;
  double w_sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const auto& law = raw_laws[static_cast<std::size_t>(j)];
    w_diff += model.pi[static_cast<std::size_t>(j)] * (law.weight_pos - law.weight_neg);
    w_sum += model.pi[static_cast<std::size_t>(j)] * (law.weight_pos + law.weight_neg);
  }
  model.skew_beta = w_diff / w_sum;

  if (n == 1) {
    model.gap = 1.0;
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(to_eigen(transition), false);
    std::vector<double> moduli;
    moduli.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) moduli.push_back(std::abs(solver.eigenvalues()(i)));
    std::sort(moduli.begin(), moduli.end(), std::greater<>());
    if (std::abs(moduli[0] - 1.0) > 1e-8)
      throw ConfigError("build_model: leading eigenvalue is not 1");
    model.gap = 1.0 - moduli[1];
    if (!(model.gap > 1e-12)) throw ConfigError("build_model: spectral gap is zero");
  }

  model.transition = std::move(transition);
  model.laws = std::move(raw_laws);
  return model;
}

WalkPath simulate_walk(const ChainModel& model, int j0, std::int64_t n, RngStream& rng) {
  if (n < 1) throw ConfigError("simulate_walk: n >= 1 required");
  if (j0 < 0 || j0 >= model.num_states()) throw ConfigError("simulate_walk: invalid start state");
  WalkPath path;
  path.hidden_states.reserve(static_cast<std::size_t>(n + 1));
  path.increments.reserve(static_cast<std::size_t>(n));
  path.partial_sums.reserve(static_cast<std::size_t>(n));
  int state = j0;
  path.hidden_states.push_back(state);
  double s = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double xi = model.laws[static_cast<std::size_t>(state)].sample(rng);
    state = model.next_state(state, rng);
    s += xi;
    path.hidden_states.push_back(state);
    path.increments.push_back(xi);
    path.partial_sums.push_back(s);
  }
  return path;
}

HillEstimate hill_estimate(std::vector<double> abs_values, std::int64_t k) {
  if (k < 10) throw ConfigError("hill_estimate: fewer than 10 exceedances");
  if (k + 1 > static_cast<std::int64_t>(abs_values.size()))
    throw ConfigError("hill_estimate: k+1 exceeds the sample size");
  std::partial_sort(abs_values.begin(), abs_values.begin() + static_cast<std::ptrdiff_t>(k + 1),
                    abs_values.end(), std::greater<>());
  const double threshold = abs_values[static_cast<std::size_t>(k)];
  if (!(threshold > 0.0)) throw ConfigError("hill_estimate: nonpositive order statistic");
  double log_sum = 0.0;
  for (std::int64_t i = 0; i < k; ++i)
    log_sum += std::log(abs_values[static_cast<std::size_t>(i)] / threshold);
  if (!(log_sum > 0.0))
    throw ConfigError("hill_estimate: degenerate tail (no spread above the threshold)");
  HillEstimate est;
  est.k_used = k;
  est.alpha_hat = static_cast<double>(k) / log_sum;
  est.stderr_ = est.alpha_hat / std::sqrt(static_cast<double>(k));
  return est;
}

HillEstimate hill_tail_check(const ChainModel& model, std::int64_t sample_size,
                             double k_fraction, std::uint64_t seed) {
  if (sample_size < 100) throw ConfigError("hill_tail_check: sample too small");
  if (!(k_fraction > 0.0 && k_fraction < 1.0))
    throw ConfigError("hill_tail_check: k_fraction in (0,1)");
  auto rng = RngStream::substream(seed, salt::kHill, 0);

  // Stationary start: the initial state is drawn from pi itself.
  const double u = rng.next_unit();
  int state = 0;
  double acc = 0.0;
  for (int j = 0; j < model.num_states(); ++j) {
    acc += model.pi[static_cast<std::size_t>(j)];
    if (u < acc) {
      state = j;
      break;
    }
    state = j;
  }

  std::vector<double> abs_xi(static_cast<std::size_t>(sample_size));
  for (std::int64_t i = 0; i < sample_size; ++i) {
    abs_xi[static_cast<std::size_t>(i)] =
        std::abs(model.laws[static_cast<std::size_t>(state)].sample(rng));
    state = model.next_state(state, rng);
  }
  const auto k = static_cast<std::int64_t>(k_fraction * static_cast<double>(sample_size));
  return hill_estimate(std::move(abs_xi), k);
}

}  // namespace stablewalk
