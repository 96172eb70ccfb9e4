#include "asyncq/shared_table.hpp"

#include <stdexcept>

namespace asyncq {

SharedTable::SharedTable(StateId num_states, double initial_value, ActionId initial_action)
    : num_states_(num_states) {
  if (num_states < 1) throw std::invalid_argument("SharedTable: need at least one state");
  values_ = std::make_unique<std::atomic<double>[]>(static_cast<std::size_t>(num_states));
  actions_ = std::make_unique<std::atomic<ActionId>[]>(static_cast<std::size_t>(num_states));
  locks_ = std::make_unique<SpinLock[]>(static_cast<std::size_t>(num_states));
  last_processed_ =
      std::make_unique<std::atomic<std::int64_t>[]>(static_cast<std::size_t>(num_states));
  for (StateId i = 0; i < num_states; ++i) {
    values_[i].store(initial_value, std::memory_order_relaxed);
    actions_[i].store(initial_action, std::memory_order_relaxed);
    last_processed_[i].store(-1, std::memory_order_relaxed);
  }
}

std::pair<double, ActionId> SharedTable::read_pair(StateId i) const {
  SpinLock& lk = locks_[i];
  lk.lock();
  const double v = values_[i].load(std::memory_order_relaxed);
  const ActionId a = actions_[i].load(std::memory_order_relaxed);
  lk.unlock();
  return {v, a};
}

ValueVector SharedTable::values() const {
  ValueVector out(static_cast<std::size_t>(num_states_));
  for (StateId i = 0; i < num_states_; ++i)
    out[i] = values_[i].load(std::memory_order_acquire);
  return out;
}

Policy SharedTable::policy() const {
  Policy out(static_cast<std::size_t>(num_states_));
  for (StateId i = 0; i < num_states_; ++i)
    out[i] = actions_[i].load(std::memory_order_relaxed);
  return out;
}

LocalSnapshot snapshot_values(const SharedTable& table) {
  LocalSnapshot snap;
  snap.taken_at = table.counter_value();
  snap.values = table.values();
  return snap;
}

bool conditional_commit(SharedTable& table, StateId i, ActionId a, double q,
                        std::int64_t ticket) {
  // Cheap pre-check: v_i only ever grows, so a failing guard here is final.
  if (!(q > table.value(i))) return false;
  SpinLock& lk = table.state_lock(i);
  lk.lock();
  const bool accept = q > table.value(i);
  if (accept) {
    table.store_pair_locked(i, q, a);
    if (CommitLog* log = table.log()) log->append({ticket, i, a, q});
  }
  lk.unlock();
  return accept;
}

}  // namespace asyncq
