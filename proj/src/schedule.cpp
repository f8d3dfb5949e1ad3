#include "sparsekit/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "sparsekit/errors.hpp"

namespace sparsekit {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kNoUpdate: return "no_update";
    case ScheduleKind::kOneShot: return "one_shot";
    case ScheduleKind::kPeriodic: return "periodic";
    case ScheduleKind::kPolynomial: return "polynomial";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "no_update") return ScheduleKind::kNoUpdate;
  if (name == "one_shot") return ScheduleKind::kOneShot;
  if (name == "periodic") return ScheduleKind::kPeriodic;
  if (name == "polynomial") return ScheduleKind::kPolynomial;
  throw ConfigError("unknown schedule kind '" + name + "'");
}

void ScheduleConfig::validate() const {
  auto in_unit = [](double s) { return s >= 0.0 && s < 1.0; };
  if (begin_step < 0) throw ConfigError("schedule begin_step must be >= 0");
  if (!in_unit(initial_sparsity)) throw ConfigError("schedule initial_sparsity must lie in [0, 1)");
  if (!in_unit(final_sparsity)) throw ConfigError("schedule final_sparsity must lie in [0, 1)");
  if (kind == ScheduleKind::kPeriodic || kind == ScheduleKind::kPolynomial) {
    if (end_step < begin_step) throw ConfigError("schedule end_step must be >= begin_step");
    if (frequency <= 0) throw ConfigError("schedule frequency must be positive");
  }
  if (kind == ScheduleKind::kPolynomial) {
    if (final_sparsity < initial_sparsity) {
      throw ConfigError("polynomial schedule needs final_sparsity >= initial_sparsity");
    }
    if (!(power > 0.0)) throw ConfigError("polynomial schedule power must be positive");
  }
}

bool should_update(const ScheduleConfig& cfg, std::int64_t step) {
  switch (cfg.kind) {
    case ScheduleKind::kNoUpdate: return false;
    case ScheduleKind::kOneShot: return step == cfg.begin_step;
    case ScheduleKind::kPeriodic:
    case ScheduleKind::kPolynomial:
      return step >= cfg.begin_step && step <= cfg.end_step && (step - cfg.begin_step) % cfg.frequency == 0;
  }
  return false;
}

double current_sparsity(const ScheduleConfig& cfg, std::int64_t step) {
  return current_sparsity(cfg, step, cfg.final_sparsity);
}

double current_sparsity(const ScheduleConfig& cfg, std::int64_t step, double layer_target) {
  switch (cfg.kind) {
    case ScheduleKind::kNoUpdate: return layer_target;
    case ScheduleKind::kOneShot:
    case ScheduleKind::kPeriodic: return step >= cfg.begin_step ? layer_target : 0.0;
    case ScheduleKind::kPolynomial: {
      const double initial = std::min(cfg.initial_sparsity, layer_target);
      double progress = 1.0;
      if (cfg.end_step > cfg.begin_step) {
        progress = static_cast<double>(step - cfg.begin_step) / static_cast<double>(cfg.end_step - cfg.begin_step);
      } else if (step < cfg.begin_step) {
        progress = 0.0;
      }
      progress = std::clamp(progress, 0.0, 1.0);
      return layer_target + (initial - layer_target) * std::pow(1.0 - progress, cfg.power);
    }
  }
  return 0.0;
}

}  // namespace sparsekit
