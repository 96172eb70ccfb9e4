#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "asyncq/types.hpp"

namespace asyncq {

/// One weighted outcome of a state-action pair: successor state, its
/// probability, and the reward collected on that specific outcome.
struct Transition {
  StateId next = 0;
  double prob = 0.0;
  double reward = 0.0;
};

/**
 * Explicit finite discounted MDP in compressed sparse row form.
 *
 * Rows are state-action pairs, row-major with the state index major. A row
 * stores the support of the transition distribution along with per-outcome
 * rewards. Mean rewards per row are precomputed by finalize().
 *
 * Build with add_transition() then call finalize() exactly once; the model
 * is immutable afterwards and safe to share across threads.
 */
class TabularMdp {
 public:
  TabularMdp(StateId num_states, ActionId num_actions, double gamma);

  StateId num_states() const { return num_states_; }
  ActionId num_actions() const { return num_actions_; }
  double gamma() const { return gamma_; }
  bool finalized() const { return finalized_; }

  /// Appends one outcome to row (i, a). Only valid before finalize().
  void add_transition(StateId i, ActionId a, StateId j, double prob, double reward);

  /// Flattens pending rows into CSR storage and precomputes mean rewards.
  void finalize();

  std::size_t row_index(StateId i, ActionId a) const {
    return static_cast<std::size_t>(i) * num_actions_ + a;
  }
  /// Transition list of (i, a). Only valid after finalize().
  std::span<const Transition> row(StateId i, ActionId a) const;
  /// Probability-weighted mean reward of row (i, a).
  double mean_reward(StateId i, ActionId a) const { return mean_rewards_[row_index(i, a)]; }
  std::int64_t num_transitions() const { return static_cast<std::int64_t>(transitions_.size()); }

 private:
  StateId num_states_;
  ActionId num_actions_;
  double gamma_;
  bool finalized_ = false;
  std::vector<std::vector<Transition>> pending_;  // emptied by finalize()
  std::vector<std::int64_t> row_offsets_;         // size num_states*num_actions + 1
  std::vector<Transition> transitions_;
  std::vector<double> mean_rewards_;
};

/// Checks every model invariant: gamma strictly inside (0,1), all row
/// probabilities positive and summing to 1 within 1e-12, rewards in [0,1],
/// successor indices in range, no empty rows. Throws ValidationError
/// naming the offending (state, action) row.
void validate_mdp(const TabularMdp& mdp);

/// One application of the optimality backup:
/// out[i,a] = mean_reward(i,a) + gamma * sum_j p(j|i,a) * max_a' q[j,a'].
/// A sup-norm contraction with modulus gamma.
QTable bellman_apply(const QTable& q, const TabularMdp& mdp);

/// One application of the fixed-policy backup:
/// out[i] = mean_reward(i, policy[i]) + gamma * sum_j p(j|i,policy[i]) * v[j].
/// Monotone in v and a sup-norm contraction with modulus gamma.
ValueVector policy_operator_apply(const ValueVector& v, const Policy& policy,
                                  const TabularMdp& mdp);

/// Row-wise maximum of q and its arg max. Ties break to the lowest action
/// index so results are deterministic.
std::pair<ValueVector, Policy> greedy_from_q(const QTable& q);

/// Seeded random dense-ish MDP for tests and synthetic experiments. Each
/// row has max(1, round(density * num_states)) distinct successors with
/// normalized positive probabilities and rewards uniform in [0,1].
TabularMdp make_random_mdp(StateId num_states, ActionId num_actions, double density,
                           double gamma, std::uint64_t seed);

}  // namespace asyncq
