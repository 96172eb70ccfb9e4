#include "asyncq/generative.hpp"

#include <algorithm>
#include <cmath>

namespace asyncq {

void GenerativeModel::sample_batch(StateId i, ActionId a, std::int64_t count, Rng& rng,
                                   const SampleSink& sink) const {
  for (std::int64_t k = 0; k < count; ++k) {
    const Outcome o = sample(i, a, rng);
    sink(o.next, o.reward, 1);
  }
}

TabularSampler::TabularSampler(const TabularMdp& mdp) : mdp_(&mdp) {
  if (!mdp.finalized()) throw std::logic_error("TabularSampler: model not finalized");
  cumulative_.reserve(static_cast<std::size_t>(mdp.num_transitions()));
  for (StateId i = 0; i < mdp.num_states(); ++i) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.row(i, a);
      if (row.empty()) throw std::logic_error("TabularSampler: empty transition row");
      double acc = 0.0;
      for (const Transition& t : row) {
        acc += t.prob;
        cumulative_.push_back(acc);
      }
    }
  }
}

Outcome TabularSampler::sample(StateId i, ActionId a, Rng& rng) const {
  const auto row = mdp_->row(i, a);
  const std::size_t base = cumulative_.size() == 0
                               ? 0
                               : static_cast<std::size_t>(row.data() - mdp_->row(0, 0).data());
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng);
  const double* first = cumulative_.data() + base;
  const double* last = first + row.size();
  const double* it = std::upper_bound(first, last, u);
  if (it == last) --it;  // guard the cumulative sum's rounding residue
  const Transition& t = row[static_cast<std::size_t>(it - first)];
  return {t.next, t.reward};
}

void TabularSampler::sample_batch(StateId i, ActionId a, std::int64_t count, Rng& rng,
                                  const SampleSink& sink) const {
  constexpr std::int64_t kLoopThreshold = 16;
  if (count < kLoopThreshold) {
    GenerativeModel::sample_batch(i, a, count, rng, sink);
    return;
  }
  // Joint draw of the per-outcome counts: successive conditional binomials
  // realize the multinomial distribution of `count` independent draws.
  const auto row = mdp_->row(i, a);
  std::int64_t remaining = count;
  double mass_left = 1.0;
  for (std::size_t k = 0; k < row.size() && remaining > 0; ++k) {
    const Transition& t = row[k];
    std::int64_t n;
    if (k + 1 == row.size() || mass_left <= t.prob) {
      n = remaining;  // last entry (or rounding residue) takes the rest
    } else {
      const double p = std::clamp(t.prob / mass_left, 0.0, 1.0);
      std::binomial_distribution<std::int64_t> bin(remaining, p);
      n = bin(rng);
    }
    if (n > 0) sink(t.next, t.reward, n);
    remaining -= n;
    mass_left -= t.prob;
  }
}

}  // namespace asyncq
