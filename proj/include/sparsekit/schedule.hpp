#pragma once

#include <cstdint>
#include <string>

namespace sparsekit {

enum class ScheduleKind { kNoUpdate, kOneShot, kPeriodic, kPolynomial };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& name);

/// When masks are recomputed and the sparsity reached at each step.
///
/// one_shot only reads begin_step. periodic and polynomial fire every
/// `frequency` steps in [begin_step, end_step]. polynomial ramps from
/// initial_sparsity to final_sparsity as
///   s_f + (s_i - s_f) * (1 - r)^power,  r = clamp((step - t0) / (t_end - t0), 0, 1).
struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::kNoUpdate;
  std::int64_t begin_step = 0;
  std::int64_t end_step = 0;
  std::int64_t frequency = 1;
  double initial_sparsity = 0.0;
  double final_sparsity = 0.0;
  double power = 3.0;

  /// Throws ConfigError on out-of-range fields.
  void validate() const;

  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

bool should_update(const ScheduleConfig& cfg, std::int64_t step);

double current_sparsity(const ScheduleConfig& cfg, std::int64_t step);

/// The same schedule evaluated for a layer whose final target differs from
/// the configured one; the initial sparsity is clipped to the layer target.
double current_sparsity(const ScheduleConfig& cfg, std::int64_t step, double layer_target);

}  // namespace sparsekit
