#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace asyncq {

using StateId = std::int32_t;
using ActionId = std::int32_t;

/// State value estimates, indexed by state.
using ValueVector = std::vector<double>;

/// Deterministic policy: one action per state.
using Policy = std::vector<ActionId>;

/// Dense state-action value table, row-major with the state index major.
struct QTable {
  StateId num_states = 0;
  ActionId num_actions = 0;
  std::vector<double> values;

  QTable() = default;
  QTable(StateId states, ActionId actions, double fill = 0.0)
      : num_states(states),
        num_actions(actions),
        values(static_cast<std::size_t>(states) * static_cast<std::size_t>(actions), fill) {}

  double& at(StateId i, ActionId a) {
    return values[static_cast<std::size_t>(i) * num_actions + a];
  }
  double at(StateId i, ActionId a) const {
    return values[static_cast<std::size_t>(i) * num_actions + a];
  }
};

/// Raised when an input (model, configuration, policy file, argument set)
/// fails validation. Callers map this to a dedicated exit code; messages
/// carry enough context to locate the offending entry.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace asyncq
