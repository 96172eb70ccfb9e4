#include "asyncq/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asyncq {

ScheduleSpec ScheduleSpec::constant_samples(std::int64_t k) {
  ScheduleSpec s;
  s.quantity = Quantity::sample_count;
  s.mode = Mode::constant;
  s.constant_value = static_cast<double>(k);
  return s;
}

ScheduleSpec ScheduleSpec::adaptive_samples() {
  ScheduleSpec s;
  s.quantity = Quantity::sample_count;
  s.mode = Mode::adaptive;
  s.exponent = 0.175;
  s.cap = 35.0;
  return s;
}

ScheduleSpec ScheduleSpec::constant_stepsize(double alpha) {
  ScheduleSpec s;
  s.quantity = Quantity::stepsize;
  s.mode = Mode::constant;
  s.constant_value = alpha;
  return s;
}

ScheduleSpec ScheduleSpec::adaptive_stepsize() {
  ScheduleSpec s;
  s.quantity = Quantity::stepsize;
  s.mode = Mode::adaptive;
  s.exponent = 0.1;
  s.floor_value = 0.1;
  return s;
}

ScheduleSpec ScheduleSpec::diminishing_stepsize() {
  ScheduleSpec s;
  s.quantity = Quantity::stepsize;
  s.mode = Mode::adaptive;
  s.exponent = 0.51;
  s.floor_value = 0.0;
  return s;
}

double schedule_value(const ScheduleSpec& spec, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("schedule_value: t must be >= 1");
  if (spec.mode == ScheduleSpec::Mode::constant) return spec.constant_value;
  const double td = static_cast<double>(t);
  if (spec.quantity == ScheduleSpec::Quantity::sample_count) {
    const double grown = std::floor(std::pow(td, spec.exponent));
    return std::clamp(grown, 1.0, spec.cap);
  }
  return std::max(std::pow(td, -spec.exponent), spec.floor_value);
}

std::int64_t schedule_sample_count(const ScheduleSpec& spec, std::int64_t t) {
  if (spec.quantity != ScheduleSpec::Quantity::sample_count)
    throw std::invalid_argument("schedule_sample_count: not a sample-count schedule");
  const double k = schedule_value(spec, t);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(k)));
}

std::int64_t iterations_for_sample_budget(const ScheduleSpec& spec, std::int64_t budget) {
  if (budget < 1) throw std::invalid_argument("iterations_for_sample_budget: budget must be >= 1");
  std::int64_t total = 0;
  std::int64_t t = 0;
  while (total < budget) {
    ++t;
    total += schedule_sample_count(spec, t);
  }
  return t;
}

}  // namespace asyncq
