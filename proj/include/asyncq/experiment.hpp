#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asyncq/solver.hpp"
#include "asyncq/types.hpp"

namespace asyncq {

enum class Algorithm { asyncqvi, asyncqvi_exact, aqlc, aqld, aql_adaptive, oracle_vi };
enum class EnvKind { sailing, random_mdp, file };

const char* algorithm_name(Algorithm a);
const char* env_name(EnvKind e);
const char* selector_name(SelectorKind s);

/**
 * Flat experiment description, the parsed form of a `key = value` config
 * document. Defaults are chosen so an empty document is already a valid
 * sailing experiment. iteration_budget (key `L`) and samples_per_update
 * (key `K`) at 0 mean "fill from the budget calculators";
 * `K = adaptive` selects the growing per-iteration sample schedule.
 */
struct ExperimentConfig {
  Algorithm algorithm = Algorithm::asyncqvi;
  EnvKind env = EnvKind::sailing;
  double gamma = 0.99;
  double epsilon = 0.1;
  double delta = 0.1;
  int threads = 1;
  std::int64_t iteration_budget = 0;    // key L
  std::int64_t samples_per_update = 0;  // key K
  bool adaptive_samples = false;        // key K = adaptive
  double alpha = 0.5;                   // constant stepsize (aqlc)
  SelectorKind selector = SelectorKind::uniform;
  std::int64_t copy_period = 1;
  std::uint64_t seed = 12345;
  // sailing
  int grid_size = 20;
  double d = 0.05;
  double sigma1 = 0.5;
  double sigma2 = 2.0;
  double vortex_p = 0.05;
  // random_mdp
  int num_states = 10;
  int num_actions = 2;
  double density = 1.0;
  // file
  std::string mdp_path;
  // evaluation
  int eval_episodes = 100;
  int eval_horizon = 200;
  double eval_gamma = 0.99;
  std::int64_t eval_every = 0;  // 0 = final evaluation only
  std::string output_path = "results.csv";
};

/// Parses a config document: one `key = value` per line, `#` comments,
/// blank lines ignored. Unknown keys, malformed values, and range
/// violations raise ValidationError carrying the line number. The result
/// has every default filled and cross-field constraints checked.
ExperimentConfig parse_config(const std::string& text);

/// Applies `--key value` style overrides on top of a parsed config, with
/// the same validation (errors name the key instead of a line number).
/// Cross-field constraints are re-checked afterwards.
void apply_overrides(ExperimentConfig& cfg,
                     const std::vector<std::pair<std::string, std::string>>& overrides);

/// Re-runs the cross-field checks (ranges spanning several keys).
void finalize_config(ExperimentConfig& cfg);

/// One CSV row of experiment output.
struct ResultRow {
  std::int64_t checkpoint_iterations = 0;
  double wall_time_ms = 0.0;
  std::int64_t samples_drawn = 0;
  double mean_return = 0.0;
  int flags = 0;
  std::optional<double> sup_gap;  // vs. the exact optimum when available
  int threads = 1;
  std::uint64_t seed = 0;
  std::string algorithm;
};

/// Exact column order every consumer relies on.
std::string result_csv_header();
std::string format_result_row(const ResultRow& row);

struct ExperimentOutput {
  std::vector<ResultRow> rows;
  /// Fully resolved configuration and run measurements, as written to the
  /// `<output_path>.meta` sidecar.
  std::vector<std::pair<std::string, std::string>> meta;
};

/// A configured environment: a sampling view always, plus the explicit
/// model when the environment defines one (random_mdp, file) or when
/// force_model asks for the sailing tabularization.
struct BuiltEnvironment {
  std::unique_ptr<TabularMdp> model;
  std::unique_ptr<GenerativeModel> sampler;
};

/// Materializes the configured environment. For env = file the config's
/// gamma is rewritten to the model file's and cross-checks rerun, so the
/// config reflects what actually runs.
BuiltEnvironment build_environment(ExperimentConfig& cfg, bool force_model);

/**
 * Experiment driver: builds the environment, runs the configured solver,
 * evaluates the policy at every eval_every checkpoint (workers parked at
 * a quiescent point; the pause excluded from solver wall time) and once
 * at the end, and appends rows to output_path (header written first when
 * the file is new or empty). The sup_gap column is filled when the
 * environment carries an explicit model: always for random_mdp/file, and
 * for sailing only in the tabular algorithms (oracle_vi, asyncqvi_exact)
 * where the model is materialized anyway; per-checkpoint gaps are
 * computed up to 1000 states, the final row's gap always.
 * Writes the resolved config sidecar to `<output_path>.meta`.
 */
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

}  // namespace asyncq
