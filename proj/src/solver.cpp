#include "asyncq/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace asyncq {

namespace {

using SteadyClock = std::chrono::steady_clock;

constexpr std::int64_t kNoCheckpoint = std::numeric_limits<std::int64_t>::max();

double seconds_between(SteadyClock::time_point a, SteadyClock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

/// What one iteration body reports back to the generic worker loop.
struct StepOutcome {
  bool accepted = false;
  std::int64_t samples = 0;
  std::int64_t staleness_age = 1;
};

/// Per-worker accounting, cache-line separated. The two atomics are read
/// by checkpoint callbacks while the worker is parked; the rest is merged
/// only after the run.
struct alignas(64) WorkerAccount {
  std::atomic<std::int64_t> samples{0};
  std::atomic<std::int64_t> selector_samples{0};
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t max_gap = 0;
  std::int64_t max_age = 0;
};

/**
 * Checkpoint barrier. Once the global completed-iteration counter reaches
 * the next checkpoint mark, every worker parks at its following iteration
 * boundary; the last arriver (or the last exiter the barrier was waiting
 * on) runs the callback while everyone is quiescent, then releases the
 * group. Callback time accumulates into paused_seconds() so the caller
 * can report pause-free wall time.
 */
class QuiescencePoint {
 public:
  QuiescencePoint(std::int64_t every, int num_workers, const SharedTable* table,
                  std::function<void(std::int64_t iter, double solver_seconds)> cb)
      : every_(every > 0 ? every : 0), active_(num_workers), table_(table), cb_(std::move(cb)) {
    next_checkpoint_ = every_ > 0 ? every_ : kNoCheckpoint;
    trigger_.store(next_checkpoint_, std::memory_order_relaxed);
  }

  void start(SteadyClock::time_point t0) { start_ = t0; }

  /// Called by a worker right after it increments the completed counter
  /// to `done`. Cheap no-op until a checkpoint is due.
  void after_iteration(std::int64_t done) {
    if (done < trigger_.load(std::memory_order_relaxed)) return;
    std::unique_lock<std::mutex> lk(mu_);
    // Re-check against live state: another worker may have completed the
    // checkpoint between the fast-path read and the lock.
    if (table_->counter_value() < next_checkpoint_) return;
    const std::int64_t gen = generation_;
    ++parked_;
    if (parked_ == active_) {
      complete_locked();
    } else {
      cv_.wait(lk, [&] { return generation_ != gen; });
    }
  }

  /// Called once per worker when it runs out of tickets. If the barrier
  /// was waiting only on this worker, completes the checkpoint on behalf
  /// of the parked ones.
  void worker_exit() {
    std::lock_guard<std::mutex> lk(mu_);
    --active_;
    if (parked_ > 0 && parked_ == active_ && table_->counter_value() >= next_checkpoint_) {
      complete_locked();
    }
  }

  double paused_seconds() const { return paused_total_; }

 private:
  void complete_locked() {
    const auto pause_start = SteadyClock::now();
    const std::int64_t iter = table_->counter_value();
    if (cb_) cb_(iter, seconds_between(start_, pause_start) - paused_total_);
    paused_total_ += seconds_between(pause_start, SteadyClock::now());
    next_checkpoint_ = every_ > 0 ? (iter / every_ + 1) * every_ : kNoCheckpoint;
    trigger_.store(next_checkpoint_, std::memory_order_relaxed);
    parked_ = 0;
    ++generation_;
    cv_.notify_all();
  }

  std::int64_t every_;
  int active_;
  const SharedTable* table_;
  std::function<void(std::int64_t, double)> cb_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::atomic<std::int64_t> trigger_{kNoCheckpoint};
  std::int64_t next_checkpoint_ = kNoCheckpoint;
  int parked_ = 0;
  std::int64_t generation_ = 0;
  double paused_total_ = 0.0;
  SteadyClock::time_point start_{};
};

/**
 * A worker's read view of the shared values, refreshed every copy_period
 * of its iterations. With a single worker refreshing every iteration, the
 * previous copy plus its own committed entry already equals a fresh copy,
 * so the O(num_states) recopy is skipped; results are bitwise identical.
 */
struct SnapshotKeeper {
  const SharedTable* table;
  std::int64_t copy_period;
  bool incremental;
  LocalSnapshot snap;
  std::int64_t local = 0;

  SnapshotKeeper(const SharedTable& t, const SolverConfig& cfg)
      : table(&t),
        copy_period(cfg.copy_period),
        incremental(cfg.num_threads == 1 && cfg.copy_period == 1) {}

  const ValueVector& refresh() {
    if (incremental) {
      if (snap.values.empty()) snap.values = table->values();
      snap.taken_at = table->counter_value();
    } else if (local % copy_period == 0) {
      snap = snapshot_values(*table);
    }
    ++local;
    return snap.values;
  }

  void note_commit(StateId i, double v) {
    if (incremental) snap.values[i] = v;
  }

  std::int64_t age_now() const { return table->counter_value() - snap.taken_at + 1; }
};

/**
 * Generic asynchronous worker loop shared by the solvers. Dispenses
 * 0-based iteration tickets, runs the per-algorithm body, and maintains
 * the asynchronism and commit accounting plus the checkpoint barrier.
 * make_body(worker_id) is invoked inside the worker thread and must
 * return a callable (ticket, state, action, rng) -> StepOutcome.
 */
template <typename MakeBody>
AsyncRunStats run_async_loop(const SolverConfig& cfg, StateId num_states, ActionId num_actions,
                             const GenerativeModel* selector_gm, SharedTable& table,
                             const RunHooks& hooks, MakeBody&& make_body) {
  const std::int64_t total = cfg.total_iterations;
  const int threads = cfg.num_threads;
  if (hooks.commit_log) table.attach_log(hooks.commit_log);

  std::vector<WorkerAccount> accounts(static_cast<std::size_t>(threads));
  std::atomic<std::int64_t> tickets{0};

  const std::int64_t every =
      (hooks.checkpoint_every > 0 && hooks.on_checkpoint) ? hooks.checkpoint_every : 0;
  QuiescencePoint qp(every, threads, &table,
                     [&](std::int64_t iter, double solver_seconds) {
                       const ValueVector vals = table.values();
                       const Policy pol = table.policy();
                       std::int64_t samples = 0;
                       std::int64_t sel_samples = 0;
                       for (const WorkerAccount& acc : accounts) {
                         samples += acc.samples.load(std::memory_order_relaxed);
                         sel_samples += acc.selector_samples.load(std::memory_order_relaxed);
                       }
                       const CheckpointView view{iter, solver_seconds, samples,
                                                 sel_samples, vals, pol};
                       hooks.on_checkpoint(view);
                     });

  auto worker_fn = [&](int w) {
    Rng rng = make_worker_rng(cfg.seed, static_cast<std::uint64_t>(w));
    CoordinateSelector selector(cfg.selector, w, threads, num_states, num_actions, selector_gm);
    auto body = make_body(w);
    WorkerAccount& acc = accounts[static_cast<std::size_t>(w)];
    const bool track_selector = cfg.selector == SelectorKind::trajectory;
    for (;;) {
      const std::int64_t ticket = tickets.fetch_add(1, std::memory_order_relaxed);
      if (ticket >= total) break;
      const auto [i, a] = selector.next(rng);
      const StepOutcome out = body(ticket, i, a, rng);
      const std::int64_t prev = table.exchange_last_processed(i, ticket);
      acc.max_gap = std::max(acc.max_gap, ticket - prev);
      acc.max_age = std::max(acc.max_age, out.staleness_age);
      if (out.accepted) {
        ++acc.accepted;
      } else {
        ++acc.rejected;
      }
      if (out.samples > 0) acc.samples.fetch_add(out.samples, std::memory_order_relaxed);
      if (track_selector)
        acc.selector_samples.store(selector.extra_samples(), std::memory_order_relaxed);
      const std::int64_t done = table.counter().fetch_add(1, std::memory_order_acq_rel) + 1;
      qp.after_iteration(done);
    }
    qp.worker_exit();
  };

  const auto t0 = SteadyClock::now();
  qp.start(t0);
  if (threads == 1) {
    worker_fn(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker_fn, w);
    for (std::thread& th : pool) th.join();
  }
  const auto t1 = SteadyClock::now();

  AsyncRunStats stats;
  stats.iterations_done = total;
  stats.wall_time_seconds = seconds_between(t0, t1) - qp.paused_seconds();
  stats.last_processed.resize(static_cast<std::size_t>(num_states));
  for (StateId i = 0; i < num_states; ++i) stats.last_processed[i] = table.last_processed(i);
  for (const WorkerAccount& acc : accounts) {
    stats.updates_accepted += acc.accepted;
    stats.updates_rejected += acc.rejected;
    stats.observed_b1 = std::max(stats.observed_b1, acc.max_gap);
    stats.observed_b2 = std::max(stats.observed_b2, acc.max_age);
    stats.samples_drawn += acc.samples.load(std::memory_order_relaxed);
    stats.selector_samples += acc.selector_samples.load(std::memory_order_relaxed);
  }
  // Trailing edge of the update-window measurement: a window must also
  // cover each state from its last processing to the end of the run, with
  // never-processed states marked -1 and so charged the whole run.
  for (StateId i = 0; i < num_states; ++i)
    stats.observed_b1 = std::max(stats.observed_b1, total - stats.last_processed[i]);
  return stats;
}

}  // namespace

SolverConfig resolve_solver_config(const SolverConfig& cfg, StateId num_states,
                                   ActionId num_actions) {
  if (num_states < 1 || num_actions < 1)
    throw ValidationError("solver config: model must have at least one state and action");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw ValidationError("solver config: gamma must lie strictly inside (0, 1)");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0 / (1.0 - cfg.gamma)))
    throw ValidationError("solver config: epsilon must lie in (0, 1/(1-gamma))");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw ValidationError("solver config: delta must lie in (0, 1)");
  if (cfg.num_threads < 1)
    throw ValidationError("solver config: num_threads must be at least 1");
  if (cfg.copy_period < 1)
    throw ValidationError("solver config: copy_period must be at least 1");
  if (cfg.total_iterations < 0)
    throw ValidationError("solver config: total_iterations must be nonnegative");
  if (cfg.samples_per_update < 0)
    throw ValidationError("solver config: samples_per_update must be nonnegative");
  if (cfg.sample_schedule.quantity != ScheduleSpec::Quantity::sample_count)
    throw ValidationError("solver config: sample_schedule must carry sample counts");

  SolverConfig out = cfg;
  if (out.total_iterations == 0) {
    AsynchronismBound proxy;
    proxy.b1 = static_cast<std::int64_t>(num_states) * num_actions;
    proxy.b2 = static_cast<std::int64_t>(out.num_threads) + out.copy_period;
    out.total_iterations = iteration_bound_L(out.epsilon, out.gamma, proxy);
  }
  if (out.sample_schedule.mode == ScheduleSpec::Mode::constant) {
    if (out.samples_per_update == 0)
      out.samples_per_update =
          sample_bound_K(out.epsilon, out.gamma, out.delta, out.total_iterations);
    out.sample_schedule = ScheduleSpec::constant_samples(out.samples_per_update);
  }
  return out;
}

CoordinateSelector::CoordinateSelector(SelectorKind kind, int worker_id, int num_threads,
                                       StateId num_states, ActionId num_actions,
                                       const GenerativeModel* gm)
    : kind_(kind), num_states_(num_states), num_actions_(num_actions), gm_(gm) {
  if (num_states < 1 || num_actions < 1)
    throw std::invalid_argument("coordinate selector: empty state or action space");
  if (num_threads < 1 || worker_id < 0 || worker_id >= num_threads)
    throw std::invalid_argument("coordinate selector: worker id out of range");
  const std::int64_t pairs = static_cast<std::int64_t>(num_states) * num_actions;
  if (kind == SelectorKind::cyclic) {
    pair_lo_ = static_cast<std::int64_t>(worker_id) * pairs / num_threads;
    const std::int64_t hi = (static_cast<std::int64_t>(worker_id) + 1) * pairs / num_threads;
    pair_len_ = hi - pair_lo_;
    if (pair_len_ == 0) {
      // More workers than pairs: the leftover workers sweep everything.
      pair_lo_ = 0;
      pair_len_ = pairs;
    }
  }
  if (kind == SelectorKind::trajectory && gm == nullptr)
    throw std::invalid_argument("coordinate selector: trajectory mode needs a model");
}

std::pair<StateId, ActionId> CoordinateSelector::next(Rng& rng) {
  switch (kind_) {
    case SelectorKind::uniform: {
      const std::int64_t pairs = static_cast<std::int64_t>(num_states_) * num_actions_;
      std::uniform_int_distribution<std::int64_t> dist(0, pairs - 1);
      const std::int64_t idx = dist(rng);
      return {static_cast<StateId>(idx / num_actions_),
              static_cast<ActionId>(idx % num_actions_)};
    }
    case SelectorKind::cyclic: {
      const std::int64_t idx = pair_lo_ + step_ % pair_len_;
      ++step_;
      return {static_cast<StateId>(idx / num_actions_),
              static_cast<ActionId>(idx % num_actions_)};
    }
    case SelectorKind::trajectory: {
      if (step_ % kTrajectoryRestart == 0) {
        std::uniform_int_distribution<StateId> start(0, num_states_ - 1);
        traj_state_ = start(rng);
      } else {
        const Outcome step = gm_->sample(traj_state_, traj_action_, rng);
        ++extra_samples_;
        traj_state_ = step.next;
      }
      std::uniform_int_distribution<ActionId> act(0, num_actions_ - 1);
      traj_action_ = act(rng);
      ++step_;
      return {traj_state_, traj_action_};
    }
  }
  throw std::logic_error("coordinate selector: unknown kind");
}

double compute_q_sample(const GenerativeModel& gm, StateId i, ActionId a,
                        const ValueVector& v_hat, std::int64_t num_samples, double epsilon,
                        double gamma, bool apply_correction, Rng& rng) {
  if (num_samples < 1)
    throw std::invalid_argument("compute_q_sample: need at least one sample");
  double reward_sum = 0.0;
  double value_sum = 0.0;
  gm.sample_batch(i, a, num_samples, rng,
                  [&](StateId next, double reward, std::int64_t count) {
                    const double c = static_cast<double>(count);
                    reward_sum += reward * c;
                    value_sum += v_hat[static_cast<std::size_t>(next)] * c;
                  });
  const double n = static_cast<double>(num_samples);
  double q = reward_sum / n + gamma * (value_sum / n);
  if (apply_correction) q -= (1.0 - gamma) * epsilon / 4.0;
  return q;
}

double compute_q_exact(const TabularMdp& mdp, StateId i, ActionId a, const ValueVector& v_hat,
                       double gamma) {
  double expected = 0.0;
  for (const Transition& t : mdp.row(i, a))
    expected += t.prob * v_hat[static_cast<std::size_t>(t.next)];
  return mdp.mean_reward(i, a) + gamma * expected;
}

SolveResult asyncqvi_run(const GenerativeModel& gm, const SolverConfig& cfg,
                         const RunHooks& hooks) {
  const StateId states = gm.num_states();
  const ActionId actions = gm.num_actions();
  const SolverConfig rcfg = resolve_solver_config(cfg, states, actions);
  SharedTable table(states);

  auto make_body = [&](int) {
    return [&, keeper = SnapshotKeeper(table, rcfg)](std::int64_t ticket, StateId i, ActionId a,
                                                     Rng& rng) mutable -> StepOutcome {
      const ValueVector& v_hat = keeper.refresh();
      const std::int64_t k = schedule_sample_count(rcfg.sample_schedule, ticket + 1);
      const double q = compute_q_sample(gm, i, a, v_hat, k, rcfg.epsilon, rcfg.gamma,
                                        /*apply_correction=*/true, rng);
      const std::int64_t age = keeper.age_now();
      const bool accepted = conditional_commit(table, i, a, q, ticket);
      if (accepted) keeper.note_commit(i, q);
      return {accepted, k, age};
    };
  };

  AsyncRunStats stats = run_async_loop(rcfg, states, actions, &gm, table, hooks, make_body);
  return {table.policy(), table.values(), std::move(stats)};
}

ExactSolveResult asyncqvi_run_exact(const TabularMdp& mdp, const SolverConfig& cfg,
                                    const RunHooks& hooks) {
  if (!mdp.finalized())
    throw ValidationError("asyncqvi_run_exact: model must be finalized");
  if (cfg.gamma != mdp.gamma())
    throw ValidationError("asyncqvi_run_exact: config gamma must match the model's gamma");
  const StateId states = mdp.num_states();
  const ActionId actions = mdp.num_actions();
  SolverConfig pre = cfg;
  // Exact backups draw nothing, so never let the resolver spend effort on
  // (or overflow in) a sample-count bound that would go unused.
  if (pre.samples_per_update == 0 &&
      pre.sample_schedule.mode == ScheduleSpec::Mode::constant)
    pre.samples_per_update = 1;
  const SolverConfig rcfg = resolve_solver_config(pre, states, actions);

  SharedTable table(states);
  QTable backup_table(states, actions, 0.0);
  std::optional<TabularSampler> traj_sampler;
  if (rcfg.selector == SelectorKind::trajectory) traj_sampler.emplace(mdp);
  const GenerativeModel* selector_gm = traj_sampler ? &*traj_sampler : nullptr;

  auto make_body = [&](int) {
    return [&, keeper = SnapshotKeeper(table, rcfg)](std::int64_t ticket, StateId i, ActionId a,
                                                     Rng&) mutable -> StepOutcome {
      const ValueVector& v_hat = keeper.refresh();
      const double q = compute_q_exact(mdp, i, a, v_hat, rcfg.gamma);
      const std::int64_t age = keeper.age_now();
      SpinLock& lock = table.state_lock(i);
      lock.lock();
      backup_table.at(i, a) = q;
      const bool accepted = q > table.value(i);
      if (accepted) {
        table.store_pair_locked(i, q, a);
        if (CommitLog* log = table.log()) log->append({ticket, i, a, q});
      }
      lock.unlock();
      if (accepted) keeper.note_commit(i, q);
      return {accepted, 0, age};
    };
  };

  AsyncRunStats stats =
      run_async_loop(rcfg, states, actions, selector_gm, table, hooks, make_body);
  return {table.policy(), table.values(), std::move(backup_table), std::move(stats)};
}

SolveResult aql_run(const GenerativeModel& gm, const SolverConfig& cfg,
                    const ScheduleSpec& stepsize, const RunHooks& hooks) {
  if (stepsize.quantity != ScheduleSpec::Quantity::stepsize)
    throw ValidationError("aql_run: the stepsize schedule must carry stepsizes");
  if (stepsize.mode == ScheduleSpec::Mode::constant &&
      !(stepsize.constant_value > 0.0 && stepsize.constant_value <= 1.0))
    throw ValidationError("aql_run: a constant stepsize must lie in (0, 1]");
  const StateId states = gm.num_states();
  const ActionId actions = gm.num_actions();
  SolverConfig pre = cfg;
  // One draw per update by construction.
  if (pre.samples_per_update == 0 &&
      pre.sample_schedule.mode == ScheduleSpec::Mode::constant)
    pre.samples_per_update = 1;
  const SolverConfig rcfg = resolve_solver_config(pre, states, actions);

  SharedTable table(states);
  std::vector<double> q_values(static_cast<std::size_t>(states) * actions, 0.0);

  auto make_body = [&](int) {
    return [&](std::int64_t ticket, StateId i, ActionId a, Rng& rng) -> StepOutcome {
      const std::int64_t read_at = table.counter_value();
      const Outcome draw = gm.sample(i, a, rng);
      const double target = draw.reward + rcfg.gamma * table.value(draw.next);
      const double alpha = schedule_value(stepsize, ticket + 1);
      const std::int64_t commit_at = table.counter_value();
      SpinLock& lock = table.state_lock(i);
      lock.lock();
      double* row = q_values.data() + static_cast<std::size_t>(i) * actions;
      const double blended = (1.0 - alpha) * row[a] + alpha * target;
      row[a] = blended;
      double best = row[0];
      ActionId best_action = 0;
      for (ActionId b = 1; b < actions; ++b) {
        if (row[b] > best) {
          best = row[b];
          best_action = b;
        }
      }
      table.store_pair_locked(i, best, best_action);
      if (CommitLog* log = table.log()) log->append({ticket, i, a, blended});
      lock.unlock();
      return {true, 1, commit_at - read_at + 1};
    };
  };

  AsyncRunStats stats = run_async_loop(rcfg, states, actions, &gm, table, hooks, make_body);
  return {table.policy(), table.values(), std::move(stats)};
}

}  // namespace asyncq
