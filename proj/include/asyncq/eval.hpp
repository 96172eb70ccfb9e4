#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "asyncq/generative.hpp"
#include "asyncq/rng.hpp"
#include "asyncq/solver.hpp"
#include "asyncq/types.hpp"

namespace asyncq {

/// Aggregate of a batch of evaluation rollouts.
struct EvaluationReport {
  int episodes = 0;
  int horizon = 0;
  double gamma_eval = 0.0;
  double mean_return = 0.0;
  std::vector<double> returns;  // per episode
  int flags = 0;                // episodes that touched a target state
};

struct RolloutResult {
  double ret = 0.0;
  bool reached_target = false;
};

/// Plays `policy` from `start` for `horizon` steps, accumulating
/// sum_t gamma_eval^t * r_t. The flag is true iff any visited state,
/// including the start and the final state, is a target; models without
/// targets always report false.
RolloutResult rollout(const GenerativeModel& gm, const Policy& policy, StateId start,
                      int horizon, double gamma_eval, Rng& rng);

/// Runs `episodes` rollouts from uniformly random non-target start states
/// (so flags measure genuinely reaching the target) and aggregates mean
/// return and flag count. Single-threaded and deterministic given seed.
EvaluationReport evaluate_policy(const GenerativeModel& gm, const Policy& policy, int episodes,
                                 int horizon, double gamma_eval, std::uint64_t seed);

/// One row of the thread-scaling benchmark.
struct SpeedupRow {
  int threads = 0;
  double wall_time_seconds = 0.0;
  double iterations_per_second = 0.0;
  double samples_per_second = 0.0;
};

/// Hardware guard default: generously above the machine's concurrency so
/// oversubscribed measurements stay possible, while absurd requests fail.
int default_thread_guard();

/// Physical core count parsed from /proc/cpuinfo, falling back to
/// hardware_concurrency. Used to pick benchmark thread sets.
int physical_core_count();

/// Runs the sampled solver once per requested thread count with identical
/// budgets (fixed_iterations for everyone) and a fresh per-row seed, and
/// reports wall time and throughput per row, in ascending thread order.
/// Throws ValidationError if a count exceeds max_threads (default:
/// default_thread_guard()).
std::vector<SpeedupRow> speedup_benchmark(const GenerativeModel& gm, const SolverConfig& cfg,
                                          std::span<const int> thread_counts,
                                          std::int64_t fixed_iterations, int max_threads = 0);

}  // namespace asyncq
