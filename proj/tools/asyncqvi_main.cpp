#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "asyncq/eval.hpp"
#include "asyncq/experiment.hpp"
#include "asyncq/mdp_io.hpp"
#include "asyncq/solver.hpp"
#include "asyncq/types.hpp"

namespace {

using namespace asyncq;

/// Command-line misuse: wrong subcommand, malformed flags. Distinct from
/// ValidationError so the exit codes differ (1 vs 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* kUsage = R"(usage: asyncqvi <subcommand> [options]

subcommands:
  solve       run the configured solver, append result rows to output_path
  evaluate    load a saved policy (--policy) and report its evaluation
  benchmark   thread-scaling run, CSV on stdout (--threads takes a list)
  validate    check the config, and the model file when one is named

options:
  --config <path>    read `key = value` lines before applying overrides
  --<key> <value>    override any config key (--key=value also works)
  --policy <path>    policy file for evaluate, one action index per line
  -h, --help         show this message

Environment: ASYNCQ_THREADS overrides the thread count last.
Exit codes: 0 ok, 1 usage, 2 validation, 3 runtime failure.
)";

struct CliArgs {
  std::string subcommand;
  std::string config_path;
  std::string policy_path;
  std::string threads_list;  // benchmark only: comma-separated counts
  std::vector<std::pair<std::string, std::string>> overrides;
};

CliArgs parse_cli(int argc, char** argv) {
  CliArgs args;
  if (argc < 2) throw UsageError("missing subcommand");
  args.subcommand = argv[1];
  if (args.subcommand == "-h" || args.subcommand == "--help") {
    std::cout << kUsage;
    std::exit(0);
  }
  if (args.subcommand != "solve" && args.subcommand != "evaluate" &&
      args.subcommand != "benchmark" && args.subcommand != "validate")
    throw UsageError("unknown subcommand `" + args.subcommand + "`");

  for (int idx = 2; idx < argc; ++idx) {
    std::string token = argv[idx];
    if (token == "-h" || token == "--help") {
      std::cout << kUsage;
      std::exit(0);
    }
    if (token.rfind("--", 0) != 0)
      throw UsageError("unexpected positional argument `" + token + "`");
    std::string key = token.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (idx + 1 >= argc) throw UsageError("flag --" + key + " needs a value");
      value = argv[++idx];
    }
    if (key.empty()) throw UsageError("malformed flag `" + token + "`");

    if (key == "config") {
      if (!args.config_path.empty()) throw UsageError("--config given twice");
      args.config_path = value;
    } else if (key == "policy") {
      if (args.subcommand != "evaluate")
        throw UsageError("--policy is only meaningful for `evaluate`");
      args.policy_path = value;
    } else if (key == "threads" && args.subcommand == "benchmark") {
      // For benchmark, --threads names the whole list of counts to sweep.
      args.threads_list = value;
    } else {
      args.overrides.emplace_back(key, value);
    }
  }
  return args;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file `" + path + "`");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ExperimentConfig assemble_config(const CliArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = parse_config(read_text_file(args.config_path));
  apply_overrides(cfg, args.overrides);
  if (const char* raw = std::getenv("ASYNCQ_THREADS"); raw != nullptr && *raw != '\0') {
    char* end = nullptr;
    errno = 0;
    const long long value = std::strtoll(raw, &end, 10);
    if (errno != 0 || end == raw || *end != '\0' || value < 1 || value > 4096)
      throw ValidationError("ASYNCQ_THREADS must be an integer in [1, 4096], got `" +
                            std::string(raw) + "`");
    cfg.threads = static_cast<int>(value);
  }
  return cfg;
}

std::vector<int> parse_thread_list(const std::string& text) {
  std::vector<int> counts;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    char* end = nullptr;
    errno = 0;
    const long long value = std::strtoll(piece.c_str(), &end, 10);
    if (errno != 0 || end == piece.c_str() || *end != '\0' || value < 1 || value > 4096)
      throw ValidationError("benchmark threads list: `" + piece +
                            "` is not an integer in [1, 4096]");
    counts.push_back(static_cast<int>(value));
  }
  if (counts.empty()) throw ValidationError("benchmark threads list is empty");
  return counts;
}

SolverConfig solver_config_from(const ExperimentConfig& cfg) {
  SolverConfig scfg;
  scfg.gamma = cfg.gamma;
  scfg.epsilon = cfg.epsilon;
  scfg.delta = cfg.delta;
  scfg.num_threads = cfg.threads;
  scfg.total_iterations = cfg.iteration_budget;
  scfg.samples_per_update = cfg.samples_per_update;
  scfg.sample_schedule = cfg.adaptive_samples
                             ? ScheduleSpec::adaptive_samples()
                             : ScheduleSpec::constant_samples(cfg.samples_per_update);
  scfg.selector = cfg.selector;
  scfg.copy_period = cfg.copy_period;
  scfg.seed = cfg.seed;
  return scfg;
}

int run_solve(const CliArgs& args) {
  const ExperimentConfig cfg = assemble_config(args);
  const ExperimentOutput out = run_experiment(cfg);
  std::cout << "wrote " << out.rows.size() << " row(s) to " << cfg.output_path << "\n";
  return 0;
}

int run_evaluate(const CliArgs& args) {
  if (args.policy_path.empty()) throw UsageError("evaluate needs --policy <path>");
  ExperimentConfig cfg = assemble_config(args);
  const BuiltEnvironment env = build_environment(cfg, /*force_model=*/false);
  const GenerativeModel& gm = *env.sampler;
  const Policy policy = read_policy_file(args.policy_path, gm.num_states(), gm.num_actions());
  const EvaluationReport report = evaluate_policy(gm, policy, cfg.eval_episodes,
                                                  cfg.eval_horizon, cfg.eval_gamma, cfg.seed);
  char line[64];
  std::snprintf(line, sizeof line, "%.17g", report.mean_return);
  std::cout << "episodes = " << report.episodes << "\n"
            << "horizon = " << report.horizon << "\n"
            << "eval_gamma = " << report.gamma_eval << "\n"
            << "mean_return = " << line << "\n"
            << "flags = " << report.flags << "\n";
  return 0;
}

int run_benchmark(const CliArgs& args) {
  ExperimentConfig cfg = assemble_config(args);
  if (cfg.iteration_budget < 1)
    throw ValidationError("benchmark needs an explicit iteration budget (L >= 1)");
  if (!cfg.adaptive_samples && cfg.samples_per_update < 1)
    throw ValidationError(
        "benchmark needs an explicit per-update sample count (K >= 1 or K = adaptive)");
  const std::vector<int> counts =
      args.threads_list.empty() ? std::vector<int>{1, 2, 4} : parse_thread_list(args.threads_list);

  const BuiltEnvironment env = build_environment(cfg, /*force_model=*/false);
  const std::vector<SpeedupRow> rows =
      speedup_benchmark(*env.sampler, solver_config_from(cfg), counts, cfg.iteration_budget);

  std::cout << "threads,wall_time_ms,iterations_per_second,samples_per_second\n";
  for (const SpeedupRow& row : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%d,%.3f,%.17g,%.17g", row.threads,
                  row.wall_time_seconds * 1000.0, row.iterations_per_second,
                  row.samples_per_second);
    std::cout << line << "\n";
  }
  return 0;
}

int run_validate(const CliArgs& args) {
  ExperimentConfig cfg = assemble_config(args);
  std::cout << "config ok: algorithm=" << algorithm_name(cfg.algorithm)
            << " env=" << env_name(cfg.env) << "\n";
  if (!cfg.mdp_path.empty()) {
    const TabularMdp mdp = read_mdp_file(cfg.mdp_path);
    std::cout << "model ok: " << mdp.num_states() << " states, " << mdp.num_actions()
              << " actions, gamma " << mdp.gamma() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const CliArgs args = parse_cli(argc, argv);
    if (args.subcommand == "solve") return run_solve(args);
    if (args.subcommand == "evaluate") return run_evaluate(args);
    if (args.subcommand == "benchmark") return run_benchmark(args);
    return run_validate(args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << kUsage;
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
