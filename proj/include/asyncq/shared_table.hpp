#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "asyncq/types.hpp"

namespace asyncq {

/// Per-state exclusion token. Spins briefly and yields while contended so
/// a preempted holder cannot stall spinners for a full scheduling quantum.
class SpinLock {
 public:
  void lock() noexcept {
    for (;;) {
      if (!flag_.test_and_set(std::memory_order_acquire)) return;
      while (flag_.test(std::memory_order_relaxed)) std::this_thread::yield();
    }
  }
  void unlock() noexcept { flag_.clear(std::memory_order_release); }

 private:
  std::atomic_flag flag_ = ATOMIC_FLAG_INIT;
};

/// One accepted table write, as recorded by the optional commit log.
struct CommitRecord {
  std::int64_t ticket = 0;  // 0-based iteration index that produced the write
  StateId state = 0;
  ActionId action = 0;
  double value = 0.0;
};

/// Test/diagnostic instrumentation: a globally ordered record of accepted
/// writes. Appends are serialized by an internal mutex, and each append
/// happens while the writer still holds the state's exclusion token, so
/// the log's per-state subsequences match the actual write order.
class CommitLog {
 public:
  void append(const CommitRecord& r) {
    std::lock_guard<std::mutex> g(mu_);
    records_.push_back(r);
  }
  void reserve(std::size_t n) {
    std::lock_guard<std::mutex> g(mu_);
    records_.reserve(n);
  }
  std::vector<CommitRecord> snapshot() const {
    std::lock_guard<std::mutex> g(mu_);
    return records_;
  }
  std::size_t size() const {
    std::lock_guard<std::mutex> g(mu_);
    return records_.size();
  }

 private:
  mutable std::mutex mu_;
  std::vector<CommitRecord> records_;
};

/**
 * The solver's shared state, O(num_states) in size: per-state value and
 * greedy action, a global completed-iteration counter, per-state exclusion
 * tokens, and a per-state last-processed mark for asynchronism
 * measurement.
 *
 * Concurrency contract: v entries are individually atomic (no torn
 * scalars); (v_i, pi_i) pairs change only under state i's exclusion
 * token; snapshots may interleave with commits, so cross-entry
 * consistency is deliberately not promised.
 */
class SharedTable {
 public:
  explicit SharedTable(StateId num_states, double initial_value = 0.0,
                       ActionId initial_action = 0);

  StateId num_states() const { return num_states_; }

  double value(StateId i) const { return values_[i].load(std::memory_order_acquire); }
  ActionId action(StateId i) const { return actions_[i].load(std::memory_order_relaxed); }

  /// Consistent (v_i, pi_i) pair, read under the state's exclusion token.
  std::pair<double, ActionId> read_pair(StateId i) const;

  /// Plain copies; per-entry atomic, not a consistent cut.
  ValueVector values() const;
  Policy policy() const;

  SpinLock& state_lock(StateId i) const { return locks_[i]; }

  /// Raw pair write; the caller must hold state_lock(i).
  void store_pair_locked(StateId i, double v, ActionId a) {
    values_[i].store(v, std::memory_order_release);
    actions_[i].store(a, std::memory_order_relaxed);
  }

  std::atomic<std::int64_t>& counter() { return counter_; }
  std::int64_t counter_value() const { return counter_.load(std::memory_order_relaxed); }

  /// Marks state i as processed at iteration `ticket`; returns the
  /// previous mark (-1 if never processed). Feeds the observed update
  /// window measurement.
  std::int64_t exchange_last_processed(StateId i, std::int64_t ticket) {
    return last_processed_[i].exchange(ticket, std::memory_order_relaxed);
  }
  std::int64_t last_processed(StateId i) const {
    return last_processed_[i].load(std::memory_order_relaxed);
  }

  void attach_log(CommitLog* log) { log_ = log; }
  CommitLog* log() const { return log_; }

 private:
  StateId num_states_;
  std::unique_ptr<std::atomic<double>[]> values_;
  std::unique_ptr<std::atomic<ActionId>[]> actions_;
  mutable std::unique_ptr<SpinLock[]> locks_;
  std::unique_ptr<std::atomic<std::int64_t>[]> last_processed_;
  std::atomic<std::int64_t> counter_{0};
  CommitLog* log_ = nullptr;
};

/// A worker's private copy of the value vector plus the counter value
/// observed immediately before copying started. Entries are per-entry
/// atomic reads; entries from different states may reflect different
/// moments, which is exactly the staleness the solver tolerates.
struct LocalSnapshot {
  ValueVector values;
  std::int64_t taken_at = 0;
};

/// Copies the table's values entry-atomically. taken_at is read before
/// the copy begins, so (counter at use - taken_at) upper-bounds the age
/// of every entry.
LocalSnapshot snapshot_values(const SharedTable& table);

/// Improve-only commit: installs (q, a) at state i iff q strictly exceeds
/// the current v_i. The guard is evaluated once outside and once more
/// under the state's exclusion token, so a racing stale q can never lower
/// a committed value, and the (value, action) pair is written atomically
/// with respect to read_pair. Appends to the attached commit log on
/// acceptance. Returns whether the write happened.
bool conditional_commit(SharedTable& table, StateId i, ActionId a, double q,
                        std::int64_t ticket = -1);

}  // namespace asyncq
