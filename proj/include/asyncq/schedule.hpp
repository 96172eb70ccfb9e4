#pragma once

#include <cstdint>

namespace asyncq {

/**
 * Per-iteration schedule for either the sample count K_t of an update or
 * the stepsize alpha_t of a blended update, evaluated at 1-based
 * iteration numbers.
 *
 * sample_count schedules: constant K, or adaptive
 *   K_t = clamp(floor(t^exponent), 1, cap).
 * stepsize schedules: constant alpha, or adaptive
 *   alpha_t = max(t^-exponent, floor_value).
 */
struct ScheduleSpec {
  enum class Quantity { sample_count, stepsize };
  enum class Mode { constant, adaptive };

  Quantity quantity = Quantity::sample_count;
  Mode mode = Mode::constant;
  double constant_value = 1.0;  // K or alpha, by quantity
  double exponent = 0.175;
  double cap = 35.0;         // adaptive sample counts: upper clamp
  double floor_value = 0.0;  // adaptive stepsizes: lower clamp

  static ScheduleSpec constant_samples(std::int64_t k);
  /// K_t = min(floor(t^0.175), 35), floored at 1.
  static ScheduleSpec adaptive_samples();
  static ScheduleSpec constant_stepsize(double alpha);
  /// alpha_t = max(t^-0.1, 0.1).
  static ScheduleSpec adaptive_stepsize();
  /// alpha_t = 1/t^0.51.
  static ScheduleSpec diminishing_stepsize();
};

/// Evaluates the schedule at iteration t >= 1. Adaptive sample counts are
/// floored at 1 in addition to the cap.
double schedule_value(const ScheduleSpec& spec, std::int64_t t);

/// schedule_value rounded to an integral sample count (>= 1). Only valid
/// for sample_count schedules.
std::int64_t schedule_sample_count(const ScheduleSpec& spec, std::int64_t t);

/// Smallest L such that the schedule's sample counts over t = 1..L sum to
/// at least `budget`. Linear scan; intended for offline budget planning.
std::int64_t iterations_for_sample_budget(const ScheduleSpec& spec, std::int64_t budget);

}  // namespace asyncq
