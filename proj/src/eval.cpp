#include "asyncq/eval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>

namespace asyncq {

namespace {

// Distinct stream tags so evaluation draws never collide with solver
// worker streams derived from the same base seed.
constexpr std::uint64_t kEvalStreamTag = 0x6576616cULL;
constexpr std::uint64_t kBenchStreamTag = 0x62656e6368ULL;

}  // namespace

RolloutResult rollout(const GenerativeModel& gm, const Policy& policy, StateId start,
                      int horizon, double gamma_eval, Rng& rng) {
  const StateId states = gm.num_states();
  const ActionId actions = gm.num_actions();
  if (static_cast<StateId>(policy.size()) != states)
    throw ValidationError("rollout: policy length must equal the number of states");
  if (start < 0 || start >= states)
    throw ValidationError("rollout: start state out of range");
  if (horizon < 0) throw ValidationError("rollout: horizon must be nonnegative");
  if (!(gamma_eval > 0.0 && gamma_eval <= 1.0))
    throw ValidationError("rollout: evaluation discount must lie in (0, 1]");

  StateId state = start;
  bool reached = gm.is_target(state);
  double ret = 0.0;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const ActionId a = policy[static_cast<std::size_t>(state)];
    if (a < 0 || a >= actions)
      throw ValidationError("rollout: policy action out of range at state " +
                            std::to_string(state));
    const Outcome step = gm.sample(state, a, rng);
    ret += discount * step.reward;
    discount *= gamma_eval;
    state = step.next;
    if (gm.is_target(state)) reached = true;
  }
  return {ret, reached};
}

EvaluationReport evaluate_policy(const GenerativeModel& gm, const Policy& policy, int episodes,
                                 int horizon, double gamma_eval, std::uint64_t seed) {
  if (episodes < 1) throw ValidationError("evaluate_policy: need at least one episode");
  const StateId states = gm.num_states();

  std::vector<StateId> non_target;
  non_target.reserve(static_cast<std::size_t>(states));
  for (StateId i = 0; i < states; ++i)
    if (!gm.is_target(i)) non_target.push_back(i);
  if (non_target.empty())
    throw ValidationError("evaluate_policy: every state is a target, nowhere to start");

  Rng rng(derive_stream_seed(seed, kEvalStreamTag));
  std::uniform_int_distribution<std::size_t> pick(0, non_target.size() - 1);

  EvaluationReport report;
  report.episodes = episodes;
  report.horizon = horizon;
  report.gamma_eval = gamma_eval;
  report.returns.reserve(static_cast<std::size_t>(episodes));
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const StateId start = non_target[pick(rng)];
    const RolloutResult r = rollout(gm, policy, start, horizon, gamma_eval, rng);
    report.returns.push_back(r.ret);
    total += r.ret;
    if (r.reached_target) ++report.flags;
  }
  report.mean_return = total / episodes;
  return report;
}

int default_thread_guard() {
  const unsigned hc = std::thread::hardware_concurrency();
  const int base = hc > 0 ? static_cast<int>(hc) : 1;
  return std::max(8, 4 * base);
}

int physical_core_count() {
  std::ifstream in("/proc/cpuinfo");
  if (in) {
    std::set<std::pair<long, long>> cores;
    int processors = 0;
    long physical_id = -1;
    std::string line;
    while (std::getline(in, line)) {
      const auto colon = line.find(':');
      std::string key = line.substr(0, colon == std::string::npos ? line.size() : colon);
      while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back())))
        key.pop_back();
      const char* value = colon == std::string::npos ? "" : line.c_str() + colon + 1;
      if (key == "processor") {
        ++processors;
        physical_id = -1;
      } else if (key == "physical id") {
        physical_id = std::strtol(value, nullptr, 10);
      } else if (key == "core id") {
        cores.insert({physical_id, std::strtol(value, nullptr, 10)});
      }
    }
    if (!cores.empty()) return static_cast<int>(cores.size());
    if (processors > 0) return processors;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<SpeedupRow> speedup_benchmark(const GenerativeModel& gm, const SolverConfig& cfg,
                                          std::span<const int> thread_counts,
                                          std::int64_t fixed_iterations, int max_threads) {
  if (thread_counts.empty())
    throw ValidationError("speedup_benchmark: need at least one thread count");
  if (fixed_iterations < 1)
    throw ValidationError("speedup_benchmark: need a positive iteration budget");
  const int guard = max_threads > 0 ? max_threads : default_thread_guard();
  for (const int t : thread_counts) {
    if (t < 1) throw ValidationError("speedup_benchmark: thread counts must be at least 1");
    if (t > guard)
      throw ValidationError("speedup_benchmark: " + std::to_string(t) +
                            " threads exceeds the hardware guard of " + std::to_string(guard));
  }

  std::vector<int> order(thread_counts.begin(), thread_counts.end());
  std::sort(order.begin(), order.end());

  std::vector<SpeedupRow> rows;
  rows.reserve(order.size());
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    SolverConfig run_cfg = cfg;
    run_cfg.num_threads = order[idx];
    run_cfg.total_iterations = fixed_iterations;
    // Fresh stream per row: rows measure throughput, not a shared sample
    // path, and reusing the base seed across different thread counts
    // would correlate their draws.
    run_cfg.seed = derive_stream_seed(cfg.seed, kBenchStreamTag + idx);
    const SolveResult result = asyncqvi_run(gm, run_cfg);
    const double wall = std::max(result.stats.wall_time_seconds, 1e-9);
    rows.push_back({order[idx], result.stats.wall_time_seconds,
                    static_cast<double>(fixed_iterations) / wall,
                    static_cast<double>(result.stats.samples_drawn) / wall});
  }
  return rows;
}

}  // namespace asyncq
