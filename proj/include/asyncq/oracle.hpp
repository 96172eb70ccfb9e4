#pragma once

#include <cstdint>

#include "asyncq/mdp.hpp"
#include "asyncq/types.hpp"

namespace asyncq {

/// Exact solution bundle produced by value_iteration_exact.
struct OracleSolution {
  QTable q_star;
  ValueVector v_star;   // row-wise max of q_star
  Policy pi_star;       // greedy in q_star, lowest-index tie-break
  double residual = 0;  // final sup-norm change between sweeps
  std::int64_t sweeps = 0;
};

/// Fixed-point iteration of the optimality backup from Q = 0, stopping
/// once successive sweeps differ by at most tol*(1-gamma)/(2*gamma) in sup
/// norm, which guarantees the returned table is within tol of the true
/// fixed point. Deterministic. Throws if the sweep guard
/// 10*ceil(log(1/(tol*(1-gamma)))/(1-gamma)) is exceeded, which would
/// indicate a broken model rather than slow convergence.
OracleSolution value_iteration_exact(const TabularMdp& mdp, double tol);

/// Exact value of a fixed policy: solves (I - gamma*P_pi) v = mean
/// rewards under pi as a linear system (direct sparse factorization up to
/// 20000 states, fixed-point iteration to 1e-9 beyond). The returned v
/// satisfies the system with residual at most 1e-9 * num_states.
ValueVector policy_value_exact(const TabularMdp& mdp, const Policy& policy);

/// Sup-norm distance between the policy's exact value and the optimum
/// computed at tolerance tol: how far from optimal the policy is.
double epsilon_optimality_gap(const TabularMdp& mdp, const Policy& policy, double tol);

}  // namespace asyncq
