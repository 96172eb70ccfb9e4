#include "asyncq/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "asyncq/rng.hpp"

namespace asyncq {

TabularMdp::TabularMdp(StateId num_states, ActionId num_actions, double gamma)
    : num_states_(num_states), num_actions_(num_actions), gamma_(gamma) {
  if (num_states < 1 || num_actions < 1)
    throw std::invalid_argument("TabularMdp: need at least one state and one action");
  pending_.resize(static_cast<std::size_t>(num_states) * num_actions);
}

void TabularMdp::add_transition(StateId i, ActionId a, StateId j, double prob, double reward) {
  if (finalized_) throw std::logic_error("TabularMdp: add_transition after finalize");
  if (i < 0 || i >= num_states_ || a < 0 || a >= num_actions_)
    throw std::invalid_argument("TabularMdp: (state, action) out of range");
  pending_[row_index(i, a)].push_back(Transition{j, prob, reward});
}

void TabularMdp::finalize() {
  if (finalized_) throw std::logic_error("TabularMdp: finalize called twice");
  const std::size_t rows = pending_.size();
  row_offsets_.resize(rows + 1);
  std::int64_t total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    row_offsets_[r] = total;
    total += static_cast<std::int64_t>(pending_[r].size());
  }
  row_offsets_[rows] = total;
  transitions_.reserve(static_cast<std::size_t>(total));
  for (auto& row : pending_) {
    transitions_.insert(transitions_.end(), row.begin(), row.end());
    row.clear();
    row.shrink_to_fit();
  }
  pending_.clear();
  pending_.shrink_to_fit();
  mean_rewards_.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::int64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      acc += transitions_[k].prob * transitions_[k].reward;
    mean_rewards_[r] = acc;
  }
  finalized_ = true;
}

std::span<const Transition> TabularMdp::row(StateId i, ActionId a) const {
  const std::size_t r = row_index(i, a);
  return {transitions_.data() + row_offsets_[r],
          static_cast<std::size_t>(row_offsets_[r + 1] - row_offsets_[r])};
}

namespace {

std::string row_name(StateId i, ActionId a) {
  std::ostringstream os;
  os << "(state " << i << ", action " << a << ")";
  return os.str();
}

}  // namespace

void validate_mdp(const TabularMdp& mdp) {
  if (!mdp.finalized()) throw ValidationError("mdp: not finalized");
  if (!(mdp.gamma() > 0.0 && mdp.gamma() < 1.0))
    throw ValidationError("mdp: gamma must lie strictly inside (0,1)");
  constexpr double kRowSumTol = 1e-12;
  for (StateId i = 0; i < mdp.num_states(); ++i) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.row(i, a);
      if (row.empty())
        throw ValidationError("mdp: empty transition row at " + row_name(i, a));
      double sum = 0.0;
      for (const Transition& t : row) {
        if (t.next < 0 || t.next >= mdp.num_states())
          throw ValidationError("mdp: dangling successor index at " + row_name(i, a));
        if (!(t.prob > 0.0) || !std::isfinite(t.prob))
          throw ValidationError("mdp: nonpositive probability at " + row_name(i, a));
        if (!(t.reward >= 0.0 && t.reward <= 1.0))
          throw ValidationError("mdp: reward outside [0,1] at " + row_name(i, a));
        sum += t.prob;
      }
      if (std::abs(sum - 1.0) > kRowSumTol)
        throw ValidationError("mdp: row probabilities sum to " + std::to_string(sum) +
                              " at " + row_name(i, a));
    }
  }
}

QTable bellman_apply(const QTable& q, const TabularMdp& mdp) {
  if (q.num_states != mdp.num_states() || q.num_actions != mdp.num_actions())
    throw std::invalid_argument("bellman_apply: table shape does not match the model");
  // Row maxima once, then one pass over the transitions.
  ValueVector v(q.num_states);
  for (StateId j = 0; j < q.num_states; ++j) {
    double best = q.at(j, 0);
    for (ActionId a = 1; a < q.num_actions; ++a) best = std::max(best, q.at(j, a));
    v[j] = best;
  }
  QTable out(q.num_states, q.num_actions);
  for (StateId i = 0; i < q.num_states; ++i) {
    for (ActionId a = 0; a < q.num_actions; ++a) {
      double future = 0.0;
      for (const Transition& t : mdp.row(i, a)) future += t.prob * v[t.next];
      out.at(i, a) = mdp.mean_reward(i, a) + mdp.gamma() * future;
    }
  }
  return out;
}

ValueVector policy_operator_apply(const ValueVector& v, const Policy& policy,
                                  const TabularMdp& mdp) {
  if (static_cast<StateId>(v.size()) != mdp.num_states() ||
      static_cast<StateId>(policy.size()) != mdp.num_states())
    throw std::invalid_argument("policy_operator_apply: shape mismatch");
  ValueVector out(v.size());
  for (StateId i = 0; i < mdp.num_states(); ++i) {
    const ActionId a = policy[i];
    if (a < 0 || a >= mdp.num_actions())
      throw std::invalid_argument("policy_operator_apply: action out of range at state " +
                                  std::to_string(i));
    double future = 0.0;
    for (const Transition& t : mdp.row(i, a)) future += t.prob * v[t.next];
    out[i] = mdp.mean_reward(i, a) + mdp.gamma() * future;
  }
  return out;
}

std::pair<ValueVector, Policy> greedy_from_q(const QTable& q) {
  ValueVector v(q.num_states);
  Policy pi(q.num_states);
  for (StateId i = 0; i < q.num_states; ++i) {
    double best = q.at(i, 0);
    ActionId arg = 0;
    for (ActionId a = 1; a < q.num_actions; ++a) {
      const double val = q.at(i, a);
      if (val > best) {  // strict: ties keep the lowest index
        best = val;
        arg = a;
      }
    }
    v[i] = best;
    pi[i] = arg;
  }
  return {std::move(v), std::move(pi)};
}

TabularMdp make_random_mdp(StateId num_states, ActionId num_actions, double density,
                           double gamma, std::uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0))
    throw std::invalid_argument("make_random_mdp: density must lie in (0,1]");
  TabularMdp mdp(num_states, num_actions, gamma);
  Rng rng(derive_stream_seed(seed, 0x6d6470));  // namespaced off the user seed
  const int support =
      std::max<int>(1, static_cast<int>(std::lround(density * num_states)));
  std::vector<StateId> ids(num_states);
  std::iota(ids.begin(), ids.end(), 0);
  std::uniform_real_distribution<double> weight(0.01, 1.0);
  std::uniform_real_distribution<double> reward(0.0, 1.0);
  for (StateId i = 0; i < num_states; ++i) {
    for (ActionId a = 0; a < num_actions; ++a) {
      // Partial Fisher-Yates: the first `support` entries become the row's
      // distinct successors.
      for (int k = 0; k < support; ++k) {
        std::uniform_int_distribution<int> pick(k, num_states - 1);
        std::swap(ids[k], ids[pick(rng)]);
      }
      double total = 0.0;
      std::vector<double> w(support);
      for (int k = 0; k < support; ++k) {
        w[k] = weight(rng);
        total += w[k];
      }
      for (int k = 0; k < support; ++k)
        mdp.add_transition(i, a, ids[k], w[k] / total, reward(rng));
    }
  }
  mdp.finalize();
  return mdp;
}

}  // namespace asyncq
