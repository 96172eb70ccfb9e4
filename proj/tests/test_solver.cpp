#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "asyncq/generative.hpp"
#include "asyncq/mdp.hpp"
#include "asyncq/oracle.hpp"
#include "asyncq/rng.hpp"
#include "asyncq/schedule.hpp"
#include "asyncq/shared_table.hpp"
#include "asyncq/solver.hpp"
#include "asyncq/theory.hpp"
#include "asyncq/types.hpp"

using namespace asyncq;

namespace {

TabularMdp two_state_chain() {
  TabularMdp mdp(2, 2, 0.5);
  mdp.add_transition(0, 0, 1, 1.0, 0.0);
  mdp.add_transition(0, 1, 0, 1.0, 0.25);
  mdp.add_transition(1, 0, 1, 1.0, 1.0);
  mdp.add_transition(1, 1, 1, 1.0, 1.0);
  mdp.finalize();
  return mdp;
}

double sup_diff(const ValueVector& a, const ValueVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("resolve_solver_config fills budgets from the enforceable proxies") {
  SolverConfig cfg;
  cfg.gamma = 0.8;
  cfg.epsilon = 0.5;
  cfg.delta = 0.2;
  cfg.num_threads = 3;
  cfg.copy_period = 2;

  const SolverConfig out = resolve_solver_config(cfg, 4, 2);
  const AsynchronismBound proxy{4 * 2, 3 + 2};
  CHECK(out.total_iterations == iteration_bound_L(0.5, 0.8, proxy));
  CHECK(out.samples_per_update == sample_bound_K(0.5, 0.8, 0.2, out.total_iterations));
  CHECK(out.sample_schedule.mode == ScheduleSpec::Mode::constant);
  CHECK(out.sample_schedule.constant_value == static_cast<double>(out.samples_per_update));

  // Explicit budgets pass through untouched.
  cfg.total_iterations = 123;
  cfg.samples_per_update = 7;
  const SolverConfig kept = resolve_solver_config(cfg, 4, 2);
  CHECK(kept.total_iterations == 123);
  CHECK(kept.samples_per_update == 7);

  // Adaptive schedules are left in charge of per-iteration counts.
  cfg.sample_schedule = ScheduleSpec::adaptive_samples();
  cfg.samples_per_update = 0;
  CHECK_NOTHROW(resolve_solver_config(cfg, 4, 2));
}

TEST_CASE("resolve_solver_config rejects bad parameters") {
  SolverConfig cfg;
  cfg.gamma = 0.5;

  SolverConfig bad = cfg;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(resolve_solver_config(bad, 2, 2), ValidationError);
  bad = cfg;
  bad.epsilon = 2.0;  // 1/(1-gamma) exactly
  CHECK_THROWS_AS(resolve_solver_config(bad, 2, 2), ValidationError);
  bad = cfg;
  bad.delta = 0.0;
  CHECK_THROWS_AS(resolve_solver_config(bad, 2, 2), ValidationError);
  bad = cfg;
  bad.num_threads = 0;
  CHECK_THROWS_AS(resolve_solver_config(bad, 2, 2), ValidationError);
  bad = cfg;
  bad.copy_period = 0;
  CHECK_THROWS_AS(resolve_solver_config(bad, 2, 2), ValidationError);
  bad = cfg;
  bad.sample_schedule = ScheduleSpec::constant_stepsize(0.5);  // wrong quantity
  CHECK_THROWS_AS(resolve_solver_config(bad, 2, 2), ValidationError);
}

TEST_CASE("compute_q_exact applies one expected backup") {
  const TabularMdp mdp = two_state_chain();
  const ValueVector v{0.6, 1.8};
  CHECK(compute_q_exact(mdp, 0, 0, v, 0.5) == doctest::Approx(0.0 + 0.5 * 1.8));
  CHECK(compute_q_exact(mdp, 0, 1, v, 0.5) == doctest::Approx(0.25 + 0.5 * 0.6));
  CHECK(compute_q_exact(mdp, 1, 0, v, 0.5) == doctest::Approx(1.0 + 0.5 * 1.8));
}

TEST_CASE("compute_q_sample estimates the backup with a downward slack") {
  const TabularMdp mdp = two_state_chain();
  const TabularSampler sampler(mdp);
  const ValueVector v{0.6, 1.8};
  Rng rng(5);

  // Deterministic rows make the estimate exact up to the slack.
  const double slack = (1 - 0.5) * 0.4 / 4;
  const double with = compute_q_sample(sampler, 0, 0, v, 16, 0.4, 0.5, true, rng);
  CHECK(with == doctest::Approx(0.5 * 1.8 - slack));
  const double without = compute_q_sample(sampler, 0, 0, v, 16, 0.4, 0.5, false, rng);
  CHECK(without == doctest::Approx(0.5 * 1.8));

  CHECK_THROWS(compute_q_sample(sampler, 0, 0, v, 0, 0.4, 0.5, true, rng));
}

TEST_CASE("compute_q_sample concentrates around the exact backup") {
  const TabularMdp mdp = make_random_mdp(6, 2, 1.0, 0.8, 42);
  const TabularSampler sampler(mdp);
  ValueVector v(6);
  for (StateId i = 0; i < 6; ++i) v[i] = 0.3 * i;
  Rng rng(99);

  const double exact = compute_q_exact(mdp, 2, 1, v, 0.8);
  double acc = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r)
    acc += compute_q_sample(sampler, 2, 1, v, 400, 0.5, 0.8, false, rng);
  const double mean = acc / reps;
  // Row values are bounded by 1 + 0.8*1.5; 4 sigma of the mean of means.
  CHECK(std::abs(mean - exact) <= 0.05);
}

TEST_CASE("single-thread cyclic exact mode is Gauss-Seidel over pairs") {
  const TabularMdp mdp = make_random_mdp(5, 3, 0.6, 0.7, 314);
  SolverConfig cfg;
  cfg.gamma = 0.7;
  cfg.epsilon = 0.5;
  cfg.selector = SelectorKind::cyclic;
  cfg.total_iterations = 5 * 3 * 6;
  cfg.samples_per_update = 1;

  const ExactSolveResult run = asyncqvi_run_exact(mdp, cfg);

  // Direct replay: sweep pairs in index order, committing improvements
  // against the always-current values.
  ValueVector v(5, 0.0);
  Policy pi(5, 0);
  for (std::int64_t t = 0; t < cfg.total_iterations; ++t) {
    const std::int64_t p = t % (5 * 3);
    const StateId i = static_cast<StateId>(p / 3);
    const ActionId a = static_cast<ActionId>(p % 3);
    const double q = compute_q_exact(mdp, i, a, v, 0.7);
    if (q > v[i]) {
      v[i] = q;
      pi[i] = a;
    }
  }
  CHECK(sup_diff(run.values, v) <= 1e-12);
  CHECK(run.policy == pi);
}

TEST_CASE("exact mode reaches the oracle within epsilon at the calculated budget") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TabularMdp mdp = make_random_mdp(12, 3, 0.5, 0.8, seed);
    SolverConfig cfg;
    cfg.gamma = 0.8;
    cfg.epsilon = 0.1;
    cfg.selector = SelectorKind::cyclic;
    cfg.seed = seed;

    const ExactSolveResult run = asyncqvi_run_exact(mdp, cfg);
    const OracleSolution oracle = value_iteration_exact(mdp, 1e-10);
    CHECK(sup_diff(run.values, oracle.v_star) <= 0.1);
  }
}

TEST_CASE("run accounting balances across iterations") {
  const TabularMdp mdp = make_random_mdp(4, 2, 1.0, 0.6, 7);
  const TabularSampler sampler(mdp);
  SolverConfig cfg;
  cfg.gamma = 0.6;
  cfg.epsilon = 0.4;
  cfg.total_iterations = 200;
  cfg.samples_per_update = 5;
  cfg.copy_period = 4;

  const SolveResult run = asyncqvi_run(sampler, cfg);
  const AsyncRunStats& s = run.stats;
  CHECK(s.iterations_done == 200);
  CHECK(s.updates_accepted + s.updates_rejected == 200);
  CHECK(s.samples_drawn == 200 * 5);
  CHECK(s.selector_samples == 0);
  CHECK(s.observed_b2 == 4);  // single thread reuses each snapshot copy_period times
  CHECK(s.last_processed.size() == 4);
  for (const std::int64_t mark : s.last_processed) {
    CHECK(mark >= -1);
    CHECK(mark < 200);
  }
}

TEST_CASE("adaptive schedules draw the scheduled sample counts") {
  const TabularMdp mdp = make_random_mdp(3, 2, 1.0, 0.5, 8);
  const TabularSampler sampler(mdp);
  SolverConfig cfg;
  cfg.gamma = 0.5;
  cfg.epsilon = 0.5;
  cfg.total_iterations = 300;
  cfg.sample_schedule = ScheduleSpec::adaptive_samples();

  const SolveResult run = asyncqvi_run(sampler, cfg);
  std::int64_t expect = 0;
  for (std::int64_t t = 1; t <= 300; ++t)
    expect += schedule_sample_count(ScheduleSpec::adaptive_samples(), t);
  CHECK(run.stats.samples_drawn == expect);
}

TEST_CASE("cyclic single-thread runs have the predicted asynchronism") {
  const TabularMdp mdp = make_random_mdp(6, 3, 0.5, 0.7, 21);
  SolverConfig cfg;
  cfg.gamma = 0.7;
  cfg.epsilon = 0.5;
  cfg.selector = SelectorKind::cyclic;
  cfg.total_iterations = 6 * 3 * 4;
  cfg.samples_per_update = 1;

  const ExactSolveResult run = asyncqvi_run_exact(mdp, cfg);
  // A state's actions are processed back to back; the widest revisit gap is
  // pairs - actions + 1. Snapshots refresh every iteration.
  CHECK(run.stats.observed_b1 == 6 * 3 - 3 + 1);
  CHECK(run.stats.observed_b2 == 1);
}

TEST_CASE("single-thread sampled runs are bitwise reproducible") {
  const TabularMdp mdp = make_random_mdp(8, 2, 0.7, 0.85, 33);
  const TabularSampler sampler(mdp);
  SolverConfig cfg;
  cfg.gamma = 0.85;
  cfg.epsilon = 0.3;
  cfg.total_iterations = 500;
  cfg.samples_per_update = 3;
  cfg.seed = 42;

  const SolveResult a = asyncqvi_run(sampler, cfg);
  const SolveResult b = asyncqvi_run(sampler, cfg);
  CHECK(a.values == b.values);
  CHECK(a.policy == b.policy);
  CHECK(a.stats.updates_accepted == b.stats.updates_accepted);
  CHECK(a.stats.observed_b1 == b.stats.observed_b1);

  cfg.seed = 43;
  const SolveResult c = asyncqvi_run(sampler, cfg);
  CHECK(a.values != c.values);
}

TEST_CASE("coordinate selectors cover their assigned pairs") {
  SUBCASE("cyclic full sweep for a single worker") {
    CoordinateSelector sel(SelectorKind::cyclic, 0, 1, 2, 2);
    Rng rng(1);
    std::vector<std::pair<StateId, ActionId>> seq;
    for (int k = 0; k < 5; ++k) seq.push_back(sel.next(rng));
    const std::vector<std::pair<StateId, ActionId>> expect{
        {0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 0}};
    CHECK(seq == expect);
  }
  SUBCASE("cyclic slices partition the pair space") {
    Rng rng(1);
    CoordinateSelector lo(SelectorKind::cyclic, 0, 2, 2, 2);
    CoordinateSelector hi(SelectorKind::cyclic, 1, 2, 2, 2);
    CHECK(lo.next(rng) == std::pair<StateId, ActionId>{0, 0});
    CHECK(lo.next(rng) == std::pair<StateId, ActionId>{0, 1});
    CHECK(lo.next(rng) == std::pair<StateId, ActionId>{0, 0});  // wraps within the slice
    CHECK(hi.next(rng) == std::pair<StateId, ActionId>{1, 0});
    CHECK(hi.next(rng) == std::pair<StateId, ActionId>{1, 1});
    CHECK(hi.next(rng) == std::pair<StateId, ActionId>{1, 0});
  }
  SUBCASE("more workers than pairs fall back to whole-space sweeps") {
    CoordinateSelector sel(SelectorKind::cyclic, 2, 3, 1, 1);
    Rng rng(1);
    CHECK(sel.next(rng) == std::pair<StateId, ActionId>{0, 0});
    CHECK(sel.next(rng) == std::pair<StateId, ActionId>{0, 0});
  }
  SUBCASE("uniform draws hit every pair evenly") {
    CoordinateSelector sel(SelectorKind::uniform, 0, 1, 4, 4);
    Rng rng(77);
    std::map<std::pair<StateId, ActionId>, int> counts;
    const int n = 16000;
    for (int k = 0; k < n; ++k) ++counts[sel.next(rng)];
    CHECK(counts.size() == 16);
    double chi2 = 0.0;
    for (const auto& [pair, c] : counts) {
      const double diff = c - n / 16.0;
      chi2 += diff * diff / (n / 16.0);
    }
    CHECK(chi2 < 40.0);  // 15 dof; p < 1e-3 would be ~37.7
  }
  SUBCASE("trajectory mode follows samples and restarts periodically") {
    const TabularMdp mdp = make_random_mdp(5, 2, 1.0, 0.5, 3);
    const TabularSampler sampler(mdp);
    CoordinateSelector sel(SelectorKind::trajectory, 0, 1, 5, 2, &sampler);
    Rng rng(4);
    const int n = 2 * CoordinateSelector::kTrajectoryRestart;
    for (int k = 0; k < n; ++k) {
      const auto [i, a] = sel.next(rng);
      CHECK(i >= 0);
      CHECK(i < 5);
      CHECK(a >= 0);
      CHECK(a < 2);
    }
    // Every selection except the two restart steps consumed one model draw.
    CHECK(sel.extra_samples() == n - 2);
    CHECK_THROWS(CoordinateSelector(SelectorKind::trajectory, 0, 1, 5, 2, nullptr));
  }
}

TEST_CASE("trajectory runs account selector draws separately") {
  const TabularMdp mdp = make_random_mdp(6, 2, 1.0, 0.6, 17);
  const TabularSampler sampler(mdp);
  SolverConfig cfg;
  cfg.gamma = 0.6;
  cfg.epsilon = 0.4;
  cfg.selector = SelectorKind::trajectory;
  cfg.total_iterations = 400;
  cfg.samples_per_update = 2;

  const SolveResult run = asyncqvi_run(sampler, cfg);
  CHECK(run.stats.samples_drawn == 400 * 2);
  CHECK(run.stats.selector_samples == 400 - 2);  // two restarts in 400 selections
}

TEST_CASE("checkpoints pause the run at exact multiples in single-thread mode") {
  const TabularMdp mdp = make_random_mdp(4, 2, 1.0, 0.6, 10);
  const TabularSampler sampler(mdp);
  SolverConfig cfg;
  cfg.gamma = 0.6;
  cfg.epsilon = 0.4;
  cfg.samples_per_update = 3;

  SUBCASE("budget that is not a multiple skips the final tick") {
    cfg.total_iterations = 35;
    std::vector<std::int64_t> seen;
    RunHooks hooks;
    hooks.checkpoint_every = 10;
    hooks.on_checkpoint = [&](const CheckpointView& view) {
      seen.push_back(view.iteration);
      CHECK(view.samples_drawn == view.iteration * 3);
      CHECK(view.values.size() == 4);
      CHECK(view.policy.size() == 4);
      CHECK(view.solver_seconds >= 0.0);
    };
    asyncqvi_run(sampler, cfg, hooks);
    CHECK(seen == std::vector<std::int64_t>{10, 20, 30});
  }
  SUBCASE("budget on a multiple includes the final tick") {
    cfg.total_iterations = 40;
    std::vector<std::int64_t> seen;
    RunHooks hooks;
    hooks.checkpoint_every = 10;
    hooks.on_checkpoint = [&](const CheckpointView& view) { seen.push_back(view.iteration); };
    asyncqvi_run(sampler, cfg, hooks);
    CHECK(seen == std::vector<std::int64_t>{10, 20, 30, 40});
  }
}

TEST_CASE("multi-thread exact runs keep the commit discipline") {
  const TabularMdp mdp = make_random_mdp(10, 2, 0.6, 0.8, 88);
  SolverConfig cfg;
  cfg.gamma = 0.8;
  cfg.epsilon = 0.3;
  cfg.num_threads = 4;
  cfg.total_iterations = 4000;
  cfg.samples_per_update = 1;
  cfg.copy_period = 2;

  CommitLog log;
  RunHooks hooks;
  hooks.commit_log = &log;
  const ExactSolveResult run = asyncqvi_run_exact(mdp, cfg, hooks);

  CHECK(run.stats.iterations_done == 4000);
  CHECK(run.stats.updates_accepted + run.stats.updates_rejected == 4000);
  CHECK(run.stats.updates_accepted == static_cast<std::int64_t>(log.size()));
  CHECK(run.stats.observed_b1 >= 1);
  CHECK(run.stats.observed_b2 >= 1);

  // Per-state committed values only ever grow, and stay inside [0, 1/(1-g)].
  std::map<StateId, double> running;
  for (const CommitRecord& r : log.snapshot()) {
    const auto it = running.find(r.state);
    if (it != running.end()) CHECK(r.value > it->second);
    running[r.state] = r.value;
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0 / (1 - 0.8) + 1e-9);
  }
  for (StateId i = 0; i < 10; ++i)
    if (running.count(i)) CHECK(run.values[i] == running[i]);

  // Checkpoints under contention: counts and order stay sane.
  std::vector<std::int64_t> ticks;
  RunHooks hooked;
  hooked.checkpoint_every = 500;
  hooked.on_checkpoint = [&](const CheckpointView& view) { ticks.push_back(view.iteration); };
  asyncqvi_run_exact(mdp, cfg, hooked);
  CHECK(!ticks.empty());
  for (std::size_t k = 1; k < ticks.size(); ++k) CHECK(ticks[k] > ticks[k - 1]);
  CHECK(ticks.back() <= 4000);
  CHECK(ticks.size() <= 8);
}

TEST_CASE("exact mode validates its model and discount") {
  TabularMdp raw(2, 2, 0.5);
  raw.add_transition(0, 0, 1, 1.0, 0.0);
  SolverConfig cfg;
  cfg.gamma = 0.5;
  cfg.epsilon = 0.5;
  cfg.total_iterations = 10;
  CHECK_THROWS_AS(asyncqvi_run_exact(raw, cfg), ValidationError);  // not finalized

  const TabularMdp mdp = two_state_chain();
  cfg.gamma = 0.9;  // disagrees with the model
  CHECK_THROWS_AS(asyncqvi_run_exact(mdp, cfg), ValidationError);
}

TEST_CASE("aql with unit stepsize solves a deterministic chain") {
  const TabularMdp mdp = two_state_chain();
  const TabularSampler sampler(mdp);
  SolverConfig cfg;
  cfg.gamma = 0.5;
  cfg.epsilon = 0.5;
  cfg.total_iterations = 4000;
  cfg.seed = 9;

  CommitLog log;
  RunHooks hooks;
  hooks.commit_log = &log;
  const SolveResult run = aql_run(sampler, cfg, ScheduleSpec::constant_stepsize(1.0), hooks);

  CHECK(run.values[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(run.values[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(run.policy == Policy{0, 0});
  CHECK(run.stats.samples_drawn == 4000);       // one draw per iteration
  CHECK(run.stats.updates_accepted == 4000);    // every blend writes
  CHECK(run.stats.observed_b2 == 1);            // reads are always live
  CHECK(log.size() == 4000);
}

TEST_CASE("aql validates its stepsize schedule") {
  const TabularMdp mdp = two_state_chain();
  const TabularSampler sampler(mdp);
  SolverConfig cfg;
  cfg.gamma = 0.5;
  cfg.epsilon = 0.5;
  cfg.total_iterations = 10;

  CHECK_THROWS_AS(aql_run(sampler, cfg, ScheduleSpec::constant_samples(3)), ValidationError);
  CHECK_THROWS_AS(aql_run(sampler, cfg, ScheduleSpec::constant_stepsize(0.0)), ValidationError);
  CHECK_THROWS_AS(aql_run(sampler, cfg, ScheduleSpec::constant_stepsize(1.5)), ValidationError);
  CHECK_NOTHROW(aql_run(sampler, cfg, ScheduleSpec::diminishing_stepsize()));
  CHECK_NOTHROW(aql_run(sampler, cfg, ScheduleSpec::adaptive_stepsize()));
}

TEST_CASE("multi-thread sampled runs finish the budget on a stochastic model") {
  const TabularMdp mdp = make_random_mdp(12, 3, 0.5, 0.85, 5);
  const TabularSampler sampler(mdp);
  SolverConfig cfg;
  cfg.gamma = 0.85;
  cfg.epsilon = 0.4;
  cfg.num_threads = 3;
  cfg.total_iterations = 3000;
  cfg.samples_per_update = 2;

  const SolveResult run = asyncqvi_run(sampler, cfg);
  CHECK(run.stats.iterations_done == 3000);
  CHECK(run.stats.samples_drawn == 6000);
  CHECK(run.stats.updates_accepted + run.stats.updates_rejected == 3000);
  for (StateId i = 0; i < 12; ++i) {
    CHECK(run.values[i] >= 0.0);
    CHECK(run.values[i] <= 1.0 / (1 - 0.85) + 1e-9);
  }
}
