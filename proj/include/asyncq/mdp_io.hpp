#pragma once

#include <string>

#include "asyncq/mdp.hpp"
#include "asyncq/types.hpp"

namespace asyncq {

/// Reads the plain-text model format: a header line
/// `num_states num_actions gamma`, then one line `i a j p r` per
/// transition. Blank lines and `#` comments are allowed. The result is
/// finalized and validated; parse and validation failures raise
/// ValidationError with the offending line number or row.
TabularMdp read_mdp_file(const std::string& path);

/// Writes the same format with full floating-point precision.
void write_mdp_file(const TabularMdp& mdp, const std::string& path);

/// Reads a policy file: one action index per line, exactly num_states
/// lines. Entries are range-checked against num_actions when >= 0 is
/// passed. Raises ValidationError on length or format problems.
Policy read_policy_file(const std::string& path, StateId num_states, ActionId num_actions = -1);

/// Writes one action index per line.
void write_policy_file(const Policy& policy, const std::string& path);

}  // namespace asyncq
