#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsekit/algorithms.hpp"
#include "sparsekit/dataset.hpp"

namespace sparsekit {

struct OptimizerSpec {
  std::string name = "adam";  // "adam" or "sgd"
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  [[nodiscard]] GradientTransformation build() const;
};

/// One experiment arm. `sparsity` unset means plain dense training.
struct ExperimentConfig {
  std::vector<std::size_t> layer_dims{2, 16, 3};
  DatasetSpec dataset;
  bool dataset_seed_explicit = false;
  OptimizerSpec optimizer;
  std::optional<UpdaterConfig> sparsity;
  std::uint64_t seed = 0;
  std::int64_t total_steps = 1000;
  std::size_t batch_size = 32;
  std::int64_t eval_every = 100;
  std::filesystem::path metrics_path;
  std::filesystem::path checkpoint_path;

  /// Throws ConfigError; also checks schedule end_step <= total_steps.
  void validate() const;
  /// Reseeds the master seed and everything derived from it.
  void set_seed(std::uint64_t value);
};

/// Schedule used when a sparsity block names no schedule: polynomial ramp
/// over the first 3/4 of training for pruning and STE, periodic drop/grow
/// over the same window for SET/RigL, none for Static.
ScheduleConfig default_schedule(AlgorithmKind kind, std::int64_t total_steps, double sparsity);

// JSON blocks. Every parser throws ConfigError with the offending key.
ScheduleConfig parse_schedule(const nlohmann::json& j, double sparsity);
DistributionSpec parse_distribution(const nlohmann::json& j);
StructureSpec parse_structure_json(const nlohmann::json& j);
UpdaterConfig parse_updater(const nlohmann::json& j, std::int64_t total_steps, std::uint64_t seed);
ExperimentConfig parse_experiment(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& path);

nlohmann::json to_json(const ScheduleConfig& cfg);
nlohmann::json to_json(const StructureSpec& spec);
nlohmann::json to_json(const DistributionSpec& spec);
nlohmann::json to_json(const UpdaterConfig& cfg);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Applies SPARSEKIT_SEED from the environment, if set.
void apply_env_overrides(ExperimentConfig& cfg);

}  // namespace sparsekit
