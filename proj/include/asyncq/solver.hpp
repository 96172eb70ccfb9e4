#pragma once

#include <cstdint>
#include <functional>
#include <tuple>
#include <utility>

#include "asyncq/generative.hpp"
#include "asyncq/mdp.hpp"
#include "asyncq/rng.hpp"
#include "asyncq/schedule.hpp"
#include "asyncq/shared_table.hpp"
#include "asyncq/theory.hpp"
#include "asyncq/types.hpp"

namespace asyncq {

enum class SelectorKind { uniform, cyclic, trajectory };

/**
 * Shared configuration of the asynchronous solvers.
 *
 * total_iterations (the L budget) and samples_per_update (K) may be left
 * at 0, in which case the run fills them from the budget calculators
 * using the enforceable proxies b1 = num_states*num_actions (every pair
 * visited once per sweep) and b2 = num_threads + copy_period (staleness
 * from concurrent writers plus periodic snapshot reuse).
 */
struct SolverConfig {
  double gamma = 0.99;
  double epsilon = 0.1;  // must lie in (0, 1/(1-gamma))
  double delta = 0.1;
  int num_threads = 1;
  std::int64_t total_iterations = 0;   // 0 = fill from iteration_bound_L
  std::int64_t samples_per_update = 0; // 0 = fill from sample_bound_K
  ScheduleSpec sample_schedule;        // adaptive mode overrides samples_per_update
  SelectorKind selector = SelectorKind::uniform;
  std::int64_t copy_period = 1;        // snapshot refresh period, iterations
  std::uint64_t seed = 0;
};

/// Validates ranges and returns a copy with total_iterations and
/// samples_per_update resolved (theory defaults substituted for zeros,
/// constant sample schedule synchronized with samples_per_update).
SolverConfig resolve_solver_config(const SolverConfig& cfg, StateId num_states,
                                   ActionId num_actions);

/// Measured behavior of one solver run.
struct AsyncRunStats {
  std::int64_t iterations_done = 0;
  double wall_time_seconds = 0.0;  // excludes checkpoint pauses
  /// Per state: last 0-based iteration index that processed it (-1 never).
  std::vector<std::int64_t> last_processed;
  /// Max observed update-window width: the largest gap between consecutive
  /// processings of any single state, including the run's edges.
  std::int64_t observed_b1 = 0;
  /// Max observed read staleness: over all commits,
  /// (counter at commit - snapshot taken_at) + 1.
  std::int64_t observed_b2 = 0;
  std::int64_t updates_accepted = 0;
  std::int64_t updates_rejected = 0;
  /// Estimator draws: the sum of per-iteration sample counts.
  std::int64_t samples_drawn = 0;
  /// Extra generative-model draws consumed by trajectory-mode coordinate
  /// selection (not part of any estimate, so tracked separately).
  std::int64_t selector_samples = 0;
};

struct SolveResult {
  Policy policy;
  ValueVector values;
  AsyncRunStats stats;
};

struct ExactSolveResult {
  Policy policy;
  ValueVector values;
  QTable q;
  AsyncRunStats stats;
};

/// State visible to a checkpoint callback while all workers are parked.
struct CheckpointView {
  std::int64_t iteration = 0;      // completed iterations at the pause
  double solver_seconds = 0.0;     // elapsed run time minus earlier pauses
  std::int64_t samples_drawn = 0;
  std::int64_t selector_samples = 0;
  const ValueVector& values;
  const Policy& policy;
};

/**
 * Optional run instrumentation. When checkpoint_every > 0 and
 * on_checkpoint is set, workers park at a global quiescent point every
 * checkpoint_every completed iterations; the callback then sees a
 * consistent (values, policy) pair, and the pause time is excluded from
 * reported wall time. commit_log, when set, records accepted writes.
 */
struct RunHooks {
  std::int64_t checkpoint_every = 0;
  std::function<void(const CheckpointView&)> on_checkpoint;
  CommitLog* commit_log = nullptr;
};

/**
 * Deterministic coordinate choice for one worker.
 *
 * uniform: i.i.d. uniform over states x actions.
 * cyclic: the worker sweeps its contiguous slice of the state-action
 *   index space (the space split into num_threads equal slices) in index
 *   order, wrapping; workers with an empty slice (more threads than
 *   pairs) sweep the whole space instead.
 * trajectory: follows a sampled rollout: the next state is drawn from
 *   the model at the previously selected pair, the action is uniform, and
 *   the position restarts uniformly every 200 selections so no coordinate
 *   starves. Requires a model handle; draws counted via extra_samples().
 */
class CoordinateSelector {
 public:
  CoordinateSelector(SelectorKind kind, int worker_id, int num_threads, StateId num_states,
                     ActionId num_actions, const GenerativeModel* gm = nullptr);

  std::pair<StateId, ActionId> next(Rng& rng);
  std::int64_t extra_samples() const { return extra_samples_; }

  static constexpr int kTrajectoryRestart = 200;

 private:
  SelectorKind kind_;
  StateId num_states_;
  ActionId num_actions_;
  const GenerativeModel* gm_;
  std::int64_t pair_lo_ = 0;    // cyclic slice start
  std::int64_t pair_len_ = 0;   // cyclic slice length
  std::int64_t step_ = 0;
  StateId traj_state_ = 0;
  ActionId traj_action_ = 0;
  std::int64_t extra_samples_ = 0;
};

/// K-sample estimate of the one-step lookahead at (i, a) against the
/// snapshot values: mean sampled reward + gamma * mean snapshot value at
/// sampled successors, minus the slack (1-gamma)*epsilon/4 when
/// apply_correction is set (the slack keeps optimistic commits sound
/// under sampling error). Draws through gm.sample_batch.
double compute_q_sample(const GenerativeModel& gm, StateId i, ActionId a,
                        const ValueVector& v_hat, std::int64_t num_samples, double epsilon,
                        double gamma, bool apply_correction, Rng& rng);

/// Exact-expectation counterpart of compute_q_sample:
/// mean_reward(i,a) + gamma * sum_j p(j|i,a) * v_hat[j]. No slack.
double compute_q_exact(const TabularMdp& mdp, StateId i, ActionId a, const ValueVector& v_hat,
                       double gamma);

/**
 * Sampled asynchronous optimistic solver. num_threads workers loop:
 * select coordinate -> refresh the value snapshot every copy_period
 * iterations -> estimate the lookahead from K_t samples with the
 * downward slack -> improve-only commit -> increment the global counter;
 * the run stops after total_iterations tickets. Each worker draws from
 * its own (seed, worker_id)-derived stream. Single-thread runs are
 * bitwise reproducible; multi-thread runs are reproducible in
 * distribution only.
 */
SolveResult asyncqvi_run(const GenerativeModel& gm, const SolverConfig& cfg,
                         const RunHooks& hooks = {});

/// Identical scheduling to asyncqvi_run, but every update applies the
/// exact expected backup against its snapshot (no sampling, no slack),
/// and the full state-action table of written backups is maintained and
/// returned for rate diagnostics. The value/policy pair still goes
/// through the improve-only commit. cfg.gamma must equal mdp.gamma().
ExactSolveResult asyncqvi_run_exact(const TabularMdp& mdp, const SolverConfig& cfg,
                                    const RunHooks& hooks = {});

/**
 * Asynchronous single-sample Q-learning. Workers loop: select (i, a) ->
 * draw one sample (j, r) -> under state i's exclusion token blend
 * Q[i,a] <- (1-alpha_t) Q[i,a] + alpha_t (r + gamma * v_j) and refresh
 * (v_i, pi_i) to the row max. v_j is read live from the shared table
 * (it always equals the row max of Q at j). Keeps a full state-action
 * table, unlike asyncqvi_run. The commit log, when attached, records
 * every blended Q write.
 */
SolveResult aql_run(const GenerativeModel& gm, const SolverConfig& cfg,
                    const ScheduleSpec& stepsize, const RunHooks& hooks = {});

}  // namespace asyncq
