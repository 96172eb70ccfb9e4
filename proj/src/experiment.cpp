#include "asyncq/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "asyncq/eval.hpp"
#include "asyncq/mdp_io.hpp"
#include "asyncq/oracle.hpp"
#include "asyncq/sailing.hpp"

namespace asyncq {

namespace {

constexpr std::uint64_t kEvalSeedTag = 0x65766c72ULL;  // evaluation row streams

std::string trim(const std::string& s) {
  std::size_t lo = 0;
  std::size_t hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

long long parse_integer(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected an integer, got `" + value + "`");
  }
  if (pos != value.size())
    throw ValidationError(key + ": expected an integer, got `" + value + "`");
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected a number, got `" + value + "`");
  }
  if (pos != value.size() || !std::isfinite(v))
    throw ValidationError(key + ": expected a finite number, got `" + value + "`");
  return v;
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
  if (!value.empty() && value[0] == '-')
    throw ValidationError(key + ": must be nonnegative");
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected an unsigned integer, got `" + value + "`");
  }
  if (pos != value.size())
    throw ValidationError(key + ": expected an unsigned integer, got `" + value + "`");
  return v;
}

int parse_bounded_int(const std::string& key, const std::string& value, long long lo,
                      long long hi) {
  const long long v = parse_integer(key, value);
  if (v < lo || v > hi)
    throw ValidationError(key + ": " + value + " out of range [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  return static_cast<int>(v);
}

Algorithm algorithm_from_name(const std::string& s) {
  if (s == "asyncqvi") return Algorithm::asyncqvi;
  if (s == "asyncqvi_exact") return Algorithm::asyncqvi_exact;
  if (s == "aqlc") return Algorithm::aqlc;
  if (s == "aqld") return Algorithm::aqld;
  if (s == "aql_adaptive") return Algorithm::aql_adaptive;
  if (s == "oracle_vi") return Algorithm::oracle_vi;
  throw ValidationError("algorithm: unknown value `" + s + "`");
}

EnvKind env_from_name(const std::string& s) {
  if (s == "sailing") return EnvKind::sailing;
  if (s == "random_mdp") return EnvKind::random_mdp;
  if (s == "file") return EnvKind::file;
  throw ValidationError("env: unknown value `" + s + "`");
}

SelectorKind selector_from_name(const std::string& s) {
  if (s == "uniform") return SelectorKind::uniform;
  if (s == "cyclic") return SelectorKind::cyclic;
  if (s == "trajectory") return SelectorKind::trajectory;
  throw ValidationError("selector: unknown value `" + s + "`");
}

/// Sets one key on the config; errors describe the key but carry no
/// location (callers add the line number or flag spelling).
void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "algorithm") {
    cfg.algorithm = algorithm_from_name(value);
  } else if (key == "env") {
    cfg.env = env_from_name(value);
  } else if (key == "gamma") {
    const double v = parse_real(key, value);
    if (!(v > 0.0 && v < 1.0))
      throw ValidationError("gamma: must lie strictly inside (0, 1)");
    cfg.gamma = v;
  } else if (key == "epsilon") {
    const double v = parse_real(key, value);
    if (!(v > 0.0)) throw ValidationError("epsilon: must be positive");
    cfg.epsilon = v;
  } else if (key == "delta") {
    const double v = parse_real(key, value);
    if (!(v > 0.0 && v < 1.0)) throw ValidationError("delta: must lie strictly inside (0, 1)");
    cfg.delta = v;
  } else if (key == "threads") {
    cfg.threads = parse_bounded_int(key, value, 1, 4096);
  } else if (key == "L") {
    const long long v = parse_integer(key, value);
    if (v < 0) throw ValidationError("L: must be nonnegative (0 fills the calculated budget)");
    cfg.iteration_budget = v;
  } else if (key == "K") {
    if (value == "adaptive") {
      cfg.adaptive_samples = true;
      cfg.samples_per_update = 0;
    } else {
      const long long v = parse_integer(key, value);
      if (v < 0) throw ValidationError("K: must be nonnegative (0 fills the calculated budget)");
      cfg.adaptive_samples = false;
      cfg.samples_per_update = v;
    }
  } else if (key == "alpha") {
    const double v = parse_real(key, value);
    if (!(v > 0.0 && v <= 1.0)) throw ValidationError("alpha: must lie in (0, 1]");
    cfg.alpha = v;
  } else if (key == "selector") {
    cfg.selector = selector_from_name(value);
  } else if (key == "copy_period") {
    const long long v = parse_integer(key, value);
    if (v < 1) throw ValidationError("copy_period: must be at least 1");
    cfg.copy_period = v;
  } else if (key == "seed") {
    cfg.seed = parse_seed(key, value);
  } else if (key == "grid_size") {
    cfg.grid_size = parse_bounded_int(key, value, 2, 10000);
  } else if (key == "d") {
    const double v = parse_real(key, value);
    if (!(v >= 0.0 && 4.0 * v <= 1.0))
      throw ValidationError("d: must satisfy 0 <= d and 4*d <= 1 so rewards stay in [0, 1]");
    cfg.d = v;
  } else if (key == "sigma1") {
    const double v = parse_real(key, value);
    if (v < 0.0) throw ValidationError("sigma1: must be nonnegative");
    cfg.sigma1 = v;
  } else if (key == "sigma2") {
    const double v = parse_real(key, value);
    if (v < 0.0) throw ValidationError("sigma2: must be nonnegative");
    cfg.sigma2 = v;
  } else if (key == "vortex_p") {
    const double v = parse_real(key, value);
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("vortex_p: must lie in [0, 1]");
    cfg.vortex_p = v;
  } else if (key == "num_states") {
    cfg.num_states = parse_bounded_int(key, value, 1, 1000000);
  } else if (key == "num_actions") {
    cfg.num_actions = parse_bounded_int(key, value, 1, 100000);
  } else if (key == "density") {
    const double v = parse_real(key, value);
    if (!(v > 0.0 && v <= 1.0)) throw ValidationError("density: must lie in (0, 1]");
    cfg.density = v;
  } else if (key == "mdp_path") {
    cfg.mdp_path = value;
  } else if (key == "eval_episodes") {
    cfg.eval_episodes = parse_bounded_int(key, value, 1, 1000000);
  } else if (key == "eval_horizon") {
    cfg.eval_horizon = parse_bounded_int(key, value, 1, 100000000);
  } else if (key == "eval_gamma") {
    const double v = parse_real(key, value);
    if (!(v > 0.0 && v < 1.0))
      throw ValidationError("eval_gamma: must lie strictly inside (0, 1)");
    cfg.eval_gamma = v;
  } else if (key == "eval_every") {
    const long long v = parse_integer(key, value);
    if (v < 0) throw ValidationError("eval_every: must be nonnegative (0 = final only)");
    cfg.eval_every = v;
  } else if (key == "output_path") {
    if (value.empty()) throw ValidationError("output_path: must not be empty");
    cfg.output_path = value;
  } else {
    throw ValidationError("unknown key `" + key + "`");
  }
}

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_ms(double ms) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", ms);
  return buf;
}

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::asyncqvi: return "asyncqvi";
    case Algorithm::asyncqvi_exact: return "asyncqvi_exact";
    case Algorithm::aqlc: return "aqlc";
    case Algorithm::aqld: return "aqld";
    case Algorithm::aql_adaptive: return "aql_adaptive";
    case Algorithm::oracle_vi: return "oracle_vi";
  }
  return "?";
}

const char* env_name(EnvKind e) {
  switch (e) {
    case EnvKind::sailing: return "sailing";
    case EnvKind::random_mdp: return "random_mdp";
    case EnvKind::file: return "file";
  }
  return "?";
}

const char* selector_name(SelectorKind s) {
  switch (s) {
    case SelectorKind::uniform: return "uniform";
    case SelectorKind::cyclic: return "cyclic";
    case SelectorKind::trajectory: return "trajectory";
  }
  return "?";
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("line " + std::to_string(line_no) + ": expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ValidationError("line " + std::to_string(line_no) + ": missing key");
    if (value.empty())
      throw ValidationError("line " + std::to_string(line_no) + ": missing value for `" +
                            key + "`");
    try {
      apply_key(cfg, key, value);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  finalize_config(cfg);
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg,
                     const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [key, value] : overrides) {
    if (value.empty()) throw ValidationError("--" + key + ": missing value");
    try {
      apply_key(cfg, key, value);
    } catch (const ValidationError& e) {
      throw ValidationError("--" + key + ": " + e.what());
    }
  }
  finalize_config(cfg);
}

void finalize_config(ExperimentConfig& cfg) {
  if (!(cfg.epsilon < 1.0 / (1.0 - cfg.gamma)))
    throw ValidationError("epsilon: must be less than 1/(1-gamma) = " +
                          format_real(1.0 / (1.0 - cfg.gamma)));
  if (cfg.env == EnvKind::file && cfg.mdp_path.empty())
    throw ValidationError("mdp_path: required when env = file");
  if (cfg.adaptive_samples && cfg.algorithm != Algorithm::asyncqvi)
    throw ValidationError("K: `adaptive` applies only to algorithm = asyncqvi");
}

std::string result_csv_header() {
  return "checkpoint_iterations,wall_time_ms,samples_drawn,mean_return,flags,sup_gap,"
         "threads,seed,algorithm";
}

std::string format_result_row(const ResultRow& row) {
  std::ostringstream out;
  out << row.checkpoint_iterations << ',' << format_ms(row.wall_time_ms) << ','
      << row.samples_drawn << ',' << format_real(row.mean_return) << ',' << row.flags << ',';
  if (row.sup_gap) out << format_real(*row.sup_gap);
  out << ',' << row.threads << ',' << row.seed << ',' << row.algorithm;
  return out.str();
}

BuiltEnvironment build_environment(ExperimentConfig& cfg, bool force_model) {
  BuiltEnvironment env;
  switch (cfg.env) {
    case EnvKind::sailing: {
      sailing::SailingConfig scfg = sailing::SailingConfig::centered(cfg.grid_size);
      scfg.d = cfg.d;
      scfg.sigma1 = cfg.sigma1;
      scfg.sigma2 = cfg.sigma2;
      scfg.vortex_p = cfg.vortex_p;
      if (force_model)
        env.model = std::make_unique<TabularMdp>(sailing::sailing_tabularize(scfg, cfg.gamma));
      env.sampler = std::make_unique<sailing::SailingModel>(scfg);
      break;
    }
    case EnvKind::random_mdp: {
      env.model = std::make_unique<TabularMdp>(make_random_mdp(
          static_cast<StateId>(cfg.num_states), static_cast<ActionId>(cfg.num_actions),
          cfg.density, cfg.gamma, cfg.seed));
      env.sampler = std::make_unique<TabularSampler>(*env.model);
      break;
    }
    case EnvKind::file: {
      env.model = std::make_unique<TabularMdp>(read_mdp_file(cfg.mdp_path));
      cfg.gamma = env.model->gamma();  // the model file's discount is authoritative
      finalize_config(cfg);            // re-check epsilon against the file's gamma
      env.sampler = std::make_unique<TabularSampler>(*env.model);
      break;
    }
  }
  return env;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  finalize_config(cfg);

  const bool tabular_algorithm =
      cfg.algorithm == Algorithm::asyncqvi_exact || cfg.algorithm == Algorithm::oracle_vi;

  BuiltEnvironment env = build_environment(cfg, tabular_algorithm);
  const TabularMdp* const model = env.model.get();
  const GenerativeModel& gm = *env.sampler;

  // Output CSV: append, header only when the file is new or empty.
  namespace fs = std::filesystem;
  bool need_header = true;
  {
    std::error_code ec;
    if (fs::exists(cfg.output_path, ec) && !ec) {
      const auto size = fs::file_size(cfg.output_path, ec);
      if (!ec && size > 0) need_header = false;
    }
  }
  std::ofstream out(cfg.output_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open output file: " + cfg.output_path);
  if (need_header) out << result_csv_header() << '\n';

  ExperimentOutput output;
  auto emit = [&](ResultRow row) {
    out << format_result_row(row) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + cfg.output_path);
    output.rows.push_back(std::move(row));
  };

  // Optimality-gap oracle, materialized on first use. The tolerance sits
  // far below any epsilon of interest so the reported gap is limited by
  // the policy, not the reference.
  std::optional<ValueVector> v_star;
  auto gap_against_optimum = [&](const Policy& policy) {
    const double tol = model->num_states() <= 1000 ? 1e-8 : 1e-6;
    if (!v_star) v_star = value_iteration_exact(*model, tol).v_star;
    const ValueVector v_pi = policy_value_exact(*model, policy);
    double gap = 0.0;
    for (StateId i = 0; i < model->num_states(); ++i)
      gap = std::max(gap, std::abs((*v_star)[static_cast<std::size_t>(i)] -
                                   v_pi[static_cast<std::size_t>(i)]));
    return gap;
  };

  int row_index = 0;
  auto evaluated_row = [&](std::int64_t iterations, double solver_seconds,
                           std::int64_t samples, const Policy& policy, bool final_row,
                           int threads_used) {
    const std::uint64_t eval_seed =
        derive_stream_seed(cfg.seed, kEvalSeedTag + static_cast<std::uint64_t>(row_index));
    ++row_index;
    const EvaluationReport report = evaluate_policy(gm, policy, cfg.eval_episodes,
                                                    cfg.eval_horizon, cfg.eval_gamma, eval_seed);
    ResultRow row;
    row.checkpoint_iterations = iterations;
    row.wall_time_ms = solver_seconds * 1000.0;
    row.samples_drawn = samples;
    row.mean_return = report.mean_return;
    row.flags = report.flags;
    // Per-checkpoint gaps only while the linear solves stay cheap; the
    // final row always reports one when a model exists.
    if (model && (final_row || model->num_states() <= 1000))
      row.sup_gap = gap_against_optimum(policy);
    row.threads = threads_used;
    row.seed = cfg.seed;
    row.algorithm = algorithm_name(cfg.algorithm);
    return row;
  };

  std::int64_t resolved_L = cfg.iteration_budget;
  std::int64_t resolved_K = cfg.samples_per_update;
  std::int64_t observed_b1 = -1;
  std::int64_t observed_b2 = -1;
  std::int64_t selector_samples = 0;

  if (cfg.algorithm == Algorithm::oracle_vi) {
    // tol = epsilon: the stopping rule makes the greedy policy
    // epsilon-optimal, which is the contract the gap column reports on.
    const auto t0 = std::chrono::steady_clock::now();
    const OracleSolution sol = value_iteration_exact(*model, cfg.epsilon);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit(evaluated_row(sol.sweeps, secs, 0, sol.pi_star, true, 1));
  } else {
    SolverConfig scfg;
    scfg.gamma = cfg.gamma;
    scfg.epsilon = cfg.epsilon;
    scfg.delta = cfg.delta;
    scfg.num_threads = cfg.threads;
    scfg.total_iterations = cfg.iteration_budget;
    scfg.samples_per_update = cfg.samples_per_update;
    if (cfg.adaptive_samples) scfg.sample_schedule = ScheduleSpec::adaptive_samples();
    scfg.selector = cfg.selector;
    scfg.copy_period = cfg.copy_period;
    scfg.seed = cfg.seed;

    // Resolve a copy up front: checkpoint suppression and the metadata
    // sidecar need the filled budgets. Single-sample algorithms pin K = 1.
    SolverConfig to_resolve = scfg;
    if (cfg.algorithm != Algorithm::asyncqvi && to_resolve.samples_per_update == 0 &&
        to_resolve.sample_schedule.mode == ScheduleSpec::Mode::constant)
      to_resolve.samples_per_update = 1;
    const SolverConfig resolved =
        resolve_solver_config(to_resolve, gm.num_states(), gm.num_actions());
    resolved_L = resolved.total_iterations;
    resolved_K = resolved.samples_per_update;

    RunHooks hooks;
    if (cfg.eval_every > 0) {
      hooks.checkpoint_every = cfg.eval_every;
      hooks.on_checkpoint = [&](const CheckpointView& view) {
        if (view.iteration >= resolved_L) return;  // the final row covers the end
        emit(evaluated_row(view.iteration, view.solver_seconds, view.samples_drawn,
                           view.policy, false, cfg.threads));
      };
    }

    SolveResult result;
    switch (cfg.algorithm) {
      case Algorithm::asyncqvi:
        result = asyncqvi_run(gm, scfg, hooks);
        break;
      case Algorithm::asyncqvi_exact: {
        ExactSolveResult exact = asyncqvi_run_exact(*model, scfg, hooks);
        result.policy = std::move(exact.policy);
        result.values = std::move(exact.values);
        result.stats = std::move(exact.stats);
        break;
      }
      case Algorithm::aqlc:
        result = aql_run(gm, scfg, ScheduleSpec::constant_stepsize(cfg.alpha), hooks);
        break;
      case Algorithm::aqld:
        result = aql_run(gm, scfg, ScheduleSpec::diminishing_stepsize(), hooks);
        break;
      case Algorithm::aql_adaptive:
        result = aql_run(gm, scfg, ScheduleSpec::adaptive_stepsize(), hooks);
        break;
      case Algorithm::oracle_vi:
        break;  // handled above
    }
    observed_b1 = result.stats.observed_b1;
    observed_b2 = result.stats.observed_b2;
    selector_samples = result.stats.selector_samples;
    emit(evaluated_row(result.stats.iterations_done, result.stats.wall_time_seconds,
                       result.stats.samples_drawn, result.policy, true, cfg.threads));
  }

  // Resolved-config sidecar.
  auto& meta = output.meta;
  meta.emplace_back("algorithm", algorithm_name(cfg.algorithm));
  meta.emplace_back("env", env_name(cfg.env));
  meta.emplace_back("gamma", format_real(cfg.gamma));
  meta.emplace_back("epsilon", format_real(cfg.epsilon));
  meta.emplace_back("delta", format_real(cfg.delta));
  meta.emplace_back("threads", std::to_string(cfg.threads));
  meta.emplace_back("L", std::to_string(resolved_L));
  meta.emplace_back("K", cfg.adaptive_samples ? std::string("adaptive")
                                              : std::to_string(resolved_K));
  meta.emplace_back("alpha", format_real(cfg.alpha));
  meta.emplace_back("selector", selector_name(cfg.selector));
  meta.emplace_back("copy_period", std::to_string(cfg.copy_period));
  meta.emplace_back("seed", std::to_string(cfg.seed));
  meta.emplace_back("grid_size", std::to_string(cfg.grid_size));
  meta.emplace_back("d", format_real(cfg.d));
  meta.emplace_back("sigma1", format_real(cfg.sigma1));
  meta.emplace_back("sigma2", format_real(cfg.sigma2));
  meta.emplace_back("vortex_p", format_real(cfg.vortex_p));
  meta.emplace_back("num_states", std::to_string(cfg.num_states));
  meta.emplace_back("num_actions", std::to_string(cfg.num_actions));
  meta.emplace_back("density", format_real(cfg.density));
  if (!cfg.mdp_path.empty()) meta.emplace_back("mdp_path", cfg.mdp_path);
  meta.emplace_back("eval_episodes", std::to_string(cfg.eval_episodes));
  meta.emplace_back("eval_horizon", std::to_string(cfg.eval_horizon));
  meta.emplace_back("eval_gamma", format_real(cfg.eval_gamma));
  meta.emplace_back("eval_every", std::to_string(cfg.eval_every));
  meta.emplace_back("output_path", cfg.output_path);
  if (observed_b1 >= 0) {
    meta.emplace_back("observed_b1", std::to_string(observed_b1));
    meta.emplace_back("observed_b2", std::to_string(observed_b2));
    meta.emplace_back("selector_samples", std::to_string(selector_samples));
  }

  std::ofstream meta_out(cfg.output_path + ".meta");
  if (!meta_out)
    throw std::runtime_error("cannot open metadata file: " + cfg.output_path + ".meta");
  for (const auto& [key, value] : meta) meta_out << key << " = " << value << '\n';
  if (!meta_out) throw std::runtime_error("write failed: " + cfg.output_path + ".meta");

  return output;
}

}  // namespace asyncq
