#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsekit/config.hpp"
#include "sparsekit/engine.hpp"

namespace sparsekit {

struct TrainOptions {
  /// Continue from this checkpoint instead of initializing.
  std::optional<std::filesystem::path> resume_from;
  /// Stop (and checkpoint) once this many steps have completed.
  std::optional<std::int64_t> stop_after;
  /// Receives one JSON line per evaluation, in addition to the configured
  /// metrics file.
  std::ostream* metrics_sink = nullptr;
  /// Write the configured metrics file / checkpoint. Off for in-process
  /// grid runs.
  bool write_files = true;
};

struct TrainResult {
  ParamTree params;
  OptState state;
  std::int64_t step = 0;
  std::vector<nlohmann::json> metrics;
  double final_eval_accuracy = 0.0;
  SparsitySummary summary;
};

/// Runs the instrumented training loop: optional forward projection,
/// gradient step through the (possibly wrapped) optimizer, mask
/// application. Emits {step, train_loss, eval_accuracy, per_layer_sparsity,
/// total_sparsity, masked_sparsity} every `eval_every` steps and at the end.
///
/// Throws NumericError on a non-finite loss.
TrainResult train(const ExperimentConfig& cfg, const TrainOptions& options = {});

/// Checkpoint of the current training position for `cfg`.
void save_training_checkpoint(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                              const TrainResult& result);

/// One metrics line (no trailing newline).
std::string metrics_line(const nlohmann::json& record);

// Grid runs -----------------------------------------------------------------

/// {algorithm x sparsity x seed} grid over a base experiment. The pseudo
/// algorithm "dense" trains without a sparsity wrapper.
struct ConfigMatrix {
  ExperimentConfig base;
  nlohmann::json base_sparsity = nlohmann::json::object();
  std::vector<std::string> algorithms;
  std::vector<double> sparsities;
  std::vector<std::uint64_t> seeds;
  /// Optional per-algorithm schedule blocks.
  std::map<std::string, nlohmann::json> schedules;
  std::size_t max_parallel = 0;  // 0 = hardware concurrency
};

ConfigMatrix parse_config_matrix(const nlohmann::json& j);
ConfigMatrix load_config_matrix(const std::filesystem::path& path);

/// Experiment for one grid cell.
ExperimentConfig make_cell_config(const ConfigMatrix& matrix, const std::string& algorithm, double sparsity,
                                  std::uint64_t seed);

struct CellResult {
  std::string algorithm;
  double sparsity = 0.0;
  std::vector<double> accuracies;  // one per seed, in seed order
  [[nodiscard]] double mean() const;
  /// Sample standard deviation (n - 1); 0 for a single seed.
  [[nodiscard]] double stddev() const;
};

std::vector<CellResult> run_compare(const ConfigMatrix& matrix);

/// Rows = algorithms, one mean/std column pair per sparsity.
std::string compare_csv(const ConfigMatrix& matrix, const std::vector<CellResult>& cells);

}  // namespace sparsekit
