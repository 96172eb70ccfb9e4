#include "asyncq/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace asyncq {

namespace {

void check_common(double epsilon, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ValidationError("budget: gamma must lie strictly inside (0,1)");
  if (!(epsilon > 0.0) || !(epsilon < 1.0 / (1.0 - gamma)))
    throw ValidationError("budget: epsilon must lie in (0, 1/(1-gamma))");
}

void check_bounds(const AsynchronismBound& b) {
  if (b.b1 < 1 || b.b2 < 1)
    throw ValidationError("budget: asynchronism bounds must be >= 1");
}

// Ceiling with a snap guard: values within a few extended-precision ulps
// of an integer are treated as that integer, so rounding noise in the
// formula evaluation cannot bump the budget by one.
std::int64_t ceil_snapped(long double x) {
  if (!(x >= 0.0L)) throw ValidationError("budget: formula value negative");
  if (x > 9.0e18L) throw std::overflow_error("budget: result exceeds 64-bit range");
  const long double nearest = std::nearbyintl(x);
  const long double ulp = std::fabs(std::nexttoward(x, std::numeric_limits<long double>::max()) - x);
  if (std::fabs(x - nearest) <= 4.0L * ulp) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::ceil(x));
}

}  // namespace

std::int64_t iteration_bound_L(double epsilon, double gamma, const AsynchronismBound& bounds) {
  check_common(epsilon, gamma);
  check_bounds(bounds);
  const long double one_minus = 1.0L - static_cast<long double>(gamma);
  const long double window = static_cast<long double>(bounds.b1 + bounds.b2 - 1);
  const long double log_term = std::log(2.0L / (one_minus * static_cast<long double>(epsilon)));
  const long double value = 2.0L * static_cast<long double>(bounds.b1) +
                            (window / one_minus) * log_term;
  return ceil_snapped(value);
}

std::int64_t sample_bound_K(double epsilon, double gamma, double delta, std::int64_t L) {
  check_common(epsilon, gamma);
  if (!(delta > 0.0 && delta < 1.0))
    throw ValidationError("budget: delta must lie strictly inside (0,1)");
  if (L < 1) throw ValidationError("budget: L must be >= 1");
  const long double one_minus = 1.0L - static_cast<long double>(gamma);
  const long double denom = one_minus * one_minus * one_minus * one_minus *
                            static_cast<long double>(epsilon) * static_cast<long double>(epsilon);
  const long double log_term =
      std::log(4.0L * static_cast<long double>(L) / static_cast<long double>(delta));
  return ceil_snapped(8.0L / denom * log_term);
}

double contraction_rate_rho(double gamma, const AsynchronismBound& bounds) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ValidationError("budget: gamma must lie strictly inside (0,1)");
  check_bounds(bounds);
  const long double window = static_cast<long double>(bounds.b1 + bounds.b2 - 1);
  return static_cast<double>(std::pow(static_cast<long double>(gamma), 1.0L / window));
}

double hoeffding_trial_check(const GenerativeModel& gm, const TabularMdp& mdp,
                             const ValueVector& v_hat,
                             std::span<const std::pair<StateId, ActionId>> pairs,
                             std::int64_t K, double epsilon, double gamma, int trials,
                             Rng& rng) {
  if (pairs.empty()) throw ValidationError("hoeffding_trial_check: no pairs given");
  if (K < 1) throw ValidationError("hoeffding_trial_check: K must be >= 1");
  if (trials < 1) throw ValidationError("hoeffding_trial_check: trials must be >= 1");
  if (static_cast<StateId>(v_hat.size()) != mdp.num_states())
    throw ValidationError("hoeffding_trial_check: v_hat length mismatch");
  const double tolerance = (1.0 - gamma) * epsilon / 4.0;
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    const auto [i, a] = pairs[pick(rng)];
    double exact = mdp.mean_reward(i, a);
    for (const Transition& tr : mdp.row(i, a)) exact += gamma * tr.prob * v_hat[tr.next];
    double reward_sum = 0.0, value_sum = 0.0;
    gm.sample_batch(i, a, K, rng, [&](StateId j, double r, std::int64_t n) {
      reward_sum += static_cast<double>(n) * r;
      value_sum += static_cast<double>(n) * v_hat[j];
    });
    const double estimate =
        reward_sum / static_cast<double>(K) + gamma * value_sum / static_cast<double>(K);
    if (std::abs(estimate - exact) > tolerance) ++failures;
  }
  return static_cast<double>(failures) / static_cast<double>(trials);
}

}  // namespace asyncq
