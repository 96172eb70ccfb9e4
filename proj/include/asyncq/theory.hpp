#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "asyncq/generative.hpp"
#include "asyncq/mdp.hpp"
#include "asyncq/rng.hpp"
#include "asyncq/types.hpp"

namespace asyncq {

/**
 * Asynchronism measure of a run. b1 bounds update sparsity: every
 * coordinate is processed at least once in any window of b1 consecutive
 * iterations. b2 bounds staleness: values read by an update are at most
 * b2 iterations old. b1 = b2 = 1 is fully synchronous execution.
 */
struct AsynchronismBound {
  std::int64_t b1 = 1;
  std::int64_t b2 = 1;
};

/// Iteration budget sufficient for the asynchronous optimistic solver to
/// land within epsilon of the fixed point:
///   ceil(2*b1 + (b1+b2-1)/(1-gamma) * ln(2/((1-gamma)*epsilon))).
/// Natural log; evaluated in extended precision with a snap-to-integer
/// guard before the ceiling so values that are integers up to rounding
/// error do not get bumped by one. Throws on parameter ranges outside
/// epsilon in (0, 1/(1-gamma)), gamma in (0,1), b1,b2 >= 1, or if the
/// result overflows a 64-bit integer.
std::int64_t iteration_bound_L(double epsilon, double gamma, const AsynchronismBound& bounds);

/// Per-update sample count sufficient for all L iteration estimates to
/// concentrate within the commit slack simultaneously with probability
/// 1 - delta:
///   ceil(8 / ((1-gamma)^4 * epsilon^2) * ln(4*L/delta)).
/// Same precision and range handling as iteration_bound_L; delta must be
/// in (0,1) and L >= 1.
std::int64_t sample_bound_K(double epsilon, double gamma, double delta, std::int64_t L);

/// Geometric decay factor of the error envelope per iteration:
/// gamma^(1/(b1+b2-1)). Equals gamma in the synchronous case and
/// approaches 1 as the asynchronism window grows.
double contraction_rate_rho(double gamma, const AsynchronismBound& bounds);

/// Empirical concentration check. For each trial: picks one of `pairs`
/// uniformly, draws K samples at it through gm, and flags a failure when
/// |sample mean reward + gamma * sample mean of v_hat at successors
///  - exact expectation from mdp| > (1-gamma)*epsilon/4.
/// Returns the failure fraction over `trials`.
double hoeffding_trial_check(const GenerativeModel& gm, const TabularMdp& mdp,
                             const ValueVector& v_hat,
                             std::span<const std::pair<StateId, ActionId>> pairs,
                             std::int64_t K, double epsilon, double gamma, int trials,
                             Rng& rng);

}  // namespace asyncq
