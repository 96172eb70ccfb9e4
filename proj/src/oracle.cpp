#include "asyncq/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace asyncq {

namespace {

// One optimality sweep written against precomputed row maxima; identical
// arithmetic to bellman_apply but reuses buffers across sweeps.
void sweep(const TabularMdp& mdp, const ValueVector& v, QTable& out) {
  for (StateId i = 0; i < mdp.num_states(); ++i) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      double future = 0.0;
      for (const Transition& t : mdp.row(i, a)) future += t.prob * v[t.next];
      out.at(i, a) = mdp.mean_reward(i, a) + mdp.gamma() * future;
    }
  }
}

void row_max(const QTable& q, ValueVector& v) {
  for (StateId j = 0; j < q.num_states; ++j) {
    double best = q.at(j, 0);
    for (ActionId a = 1; a < q.num_actions; ++a) best = std::max(best, q.at(j, a));
    v[j] = best;
  }
}

}  // namespace

OracleSolution value_iteration_exact(const TabularMdp& mdp, double tol) {
  if (!(tol > 0.0) || !std::isfinite(tol))
    throw std::invalid_argument("value_iteration_exact: tol must be positive");
  const double gamma = mdp.gamma();
  const double threshold = tol * (1.0 - gamma) / (2.0 * gamma);
  const std::int64_t guard = 10 * static_cast<std::int64_t>(std::ceil(
                                      std::log(1.0 / (tol * (1.0 - gamma))) / (1.0 - gamma)));

  OracleSolution sol;
  QTable q(mdp.num_states(), mdp.num_actions(), 0.0);
  QTable next(mdp.num_states(), mdp.num_actions(), 0.0);
  ValueVector v(mdp.num_states(), 0.0);
  for (;;) {
    sweep(mdp, v, next);
    double diff = 0.0;
    for (std::size_t k = 0; k < q.values.size(); ++k)
      diff = std::max(diff, std::abs(next.values[k] - q.values[k]));
    std::swap(q, next);
    row_max(q, v);
    ++sol.sweeps;
    sol.residual = diff;
    if (diff <= threshold) break;
    if (sol.sweeps > std::max<std::int64_t>(guard, 1))
      throw std::runtime_error("value_iteration_exact: sweep guard exceeded");
  }
  auto [vstar, pistar] = greedy_from_q(q);
  sol.q_star = std::move(q);
  sol.v_star = std::move(vstar);
  sol.pi_star = std::move(pistar);
  return sol;
}

ValueVector policy_value_exact(const TabularMdp& mdp, const Policy& policy) {
  const StateId n = mdp.num_states();
  if (static_cast<StateId>(policy.size()) != n)
    throw std::invalid_argument("policy_value_exact: policy length mismatch");
  for (StateId i = 0; i < n; ++i)
    if (policy[i] < 0 || policy[i] >= mdp.num_actions())
      throw std::invalid_argument("policy_value_exact: action out of range at state " +
                                  std::to_string(i));
  constexpr StateId kDirectGuard = 20000;
  const double gamma = mdp.gamma();

  if (n <= kDirectGuard) {
    Eigen::VectorXd rhs(n);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 4);
    for (StateId i = 0; i < n; ++i) {
      trips.emplace_back(i, i, 1.0);
      for (const Transition& t : mdp.row(i, policy[i]))
        trips.emplace_back(i, t.next, -gamma * t.prob);
      rhs[i] = mdp.mean_reward(i, policy[i]);
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());  // duplicate (i,i) entries sum
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("policy_value_exact: factorization failed (corrupt model?)");
    const Eigen::VectorXd x = lu.solve(rhs);
    return ValueVector(x.data(), x.data() + n);
  }

  // Large systems: fixed-point iteration of the policy backup to 1e-9.
  ValueVector v(n, 0.0);
  const double tol = 1e-9;
  const std::int64_t guard = 10 * static_cast<std::int64_t>(std::ceil(
                                      std::log(1.0 / (tol * (1.0 - gamma))) / (1.0 - gamma)));
  for (std::int64_t it = 0; it <= guard; ++it) {
    ValueVector next = policy_operator_apply(v, policy, mdp);
    double diff = 0.0;
    for (StateId i = 0; i < n; ++i) diff = std::max(diff, std::abs(next[i] - v[i]));
    v = std::move(next);
    if (diff <= tol * (1.0 - gamma)) return v;
  }
  throw std::runtime_error("policy_value_exact: iteration guard exceeded");
}

double epsilon_optimality_gap(const TabularMdp& mdp, const Policy& policy, double tol) {
  const OracleSolution sol = value_iteration_exact(mdp, tol);
  const ValueVector v_pi = policy_value_exact(mdp, policy);
  double gap = 0.0;
  for (StateId i = 0; i < mdp.num_states(); ++i)
    gap = std::max(gap, std::abs(sol.v_star[i] - v_pi[i]));
  return gap;
}

}  // namespace asyncq
