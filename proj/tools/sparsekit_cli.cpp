// sparsekit command line: train, prune, inspect and compare experiments.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "sparsekit/checkpoint.hpp"
#include "sparsekit/engine.hpp"
#include "sparsekit/experiment.hpp"

namespace sk = sparsekit;
using nlohmann::json;

namespace {

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

int run_train(const std::string& config_path, const std::string& resume, std::int64_t stop_after,
              const std::string& metrics, const std::string& checkpoint, bool quiet) {
  sk::ExperimentConfig cfg = sk::load_experiment(config_path);
  sk::apply_env_overrides(cfg);
  if (!metrics.empty()) cfg.metrics_path = metrics;
  if (!checkpoint.empty()) cfg.checkpoint_path = checkpoint;
  cfg.validate();

  sk::TrainOptions options;
  if (!resume.empty()) options.resume_from = resume;
  if (stop_after > 0) options.stop_after = stop_after;
  if (!quiet) options.metrics_sink = &std::cout;
  const sk::TrainResult result = sk::train(cfg, options);
  if (!quiet) {
    std::cerr << "finished at step " << result.step << ", eval accuracy " << result.final_eval_accuracy
              << ", total sparsity " << result.summary.total.sparsity() << '\n';
  }
  return 0;
}

int run_prune(const std::string& checkpoint, const std::string& out_dir, const std::string& algorithm,
              std::optional<double> sparsity, const std::string& structure, const std::string& distribution,
              bool packed, std::uint64_t seed) {
  sk::UpdaterConfig cfg;
  cfg.algorithm = sk::parse_algorithm(algorithm);
  cfg.structure = sk::parse_structure(structure);
  double target = sparsity.value_or(0.0);
  if (cfg.structure.fixes_sparsity()) {
    const double implied = cfg.structure.implied_sparsity();
    if (sparsity && std::abs(*sparsity - implied) > 1e-9) {
      std::cerr << "warning: " << sk::to_string(cfg.structure) << " fixes sparsity at " << implied
                << "; ignoring --sparsity " << *sparsity << '\n';
    }
    target = implied;
  } else if (!sparsity) {
    throw sk::ConfigError("--sparsity is required unless an N:M structure is given");
  }
  cfg.distribution.kind = sk::parse_distribution_kind(distribution);
  cfg.distribution.target_sparsity = target;
  cfg.schedule.final_sparsity = target;
  cfg.use_packed_masks = packed;
  cfg.rng_seed = seed;
  const sk::Updater updater(cfg);

  sk::Checkpoint source = sk::load_checkpoint(checkpoint);
  auto pruned_state = std::make_shared<sk::SparsityState>();
  pruned_state->masks = updater.instant_masks(source.params);
  pruned_state->targets = updater.layer_targets(source.params);

  sk::Checkpoint out;
  out.params = sk::apply_masks(source.params, pruned_state->masks);
  out.step = source.step;
  out.state.step = source.step;
  out.state.extension = std::move(pruned_state);
  out.config_hash = source.config_hash;
  out.metadata = source.metadata;
  out.metadata["pruned"] = sk::to_json(cfg);
  out.metadata["pruned_from"] = checkpoint;
  sk::save_checkpoint(out_dir, out);

  const sk::SparsitySummary summary = sk::sparsity_summary(sk::sparsity_state(out.state).masks, out.params);
  std::cout << json{{"checkpoint", out_dir},
                    {"total_sparsity", summary.total.sparsity()},
                    {"masked_sparsity", summary.masked.sparsity()}}
                   .dump()
            << '\n';
  return 0;
}

int run_inspect(const std::string& checkpoint, bool as_json) {
  const sk::Checkpoint c = sk::load_checkpoint(checkpoint);
  sk::MaskTree masks;
  if (c.state.extension) masks = sk::sparsity_state(c.state).masks;
  const sk::SparsitySummary summary = sk::sparsity_summary(masks, c.params);

  if (as_json) {
    json per_path = json::object();
    for (const auto& [path, tensor] : c.params) {
      auto it = summary.per_path.find(path);
      const std::size_t nnz = it != summary.per_path.end() ? it->second.nonzeros : tensor.size();
      per_path[path] = {{"shape", tensor.shape()},
                        {"nonzeros", nnz},
                        {"size", tensor.size()},
                        {"masked", it != summary.per_path.end()},
                        {"sparsity", it != summary.per_path.end() ? it->second.sparsity() : 0.0}};
    }
    std::cout << json{{"step", c.step},
                      {"per_path", per_path},
                      {"total", {{"nonzeros", summary.total.nonzeros}, {"size", summary.total.size},
                                 {"sparsity", summary.total.sparsity()}}},
                      {"masked", {{"nonzeros", summary.masked.nonzeros}, {"size", summary.masked.size},
                                  {"sparsity", summary.masked.sparsity()}}}}
                     .dump(2)
              << '\n';
    return 0;
  }

  std::cout << "checkpoint " << checkpoint << " at step " << c.step << '\n';
  std::cout << std::left << std::setw(24) << "path" << std::setw(14) << "shape" << std::right << std::setw(10)
            << "nonzeros" << std::setw(10) << "size" << std::setw(10) << "sparsity" << '\n';
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& [path, tensor] : c.params) {
    auto it = summary.per_path.find(path);
    const bool masked = it != summary.per_path.end();
    std::cout << std::left << std::setw(24) << path << std::setw(14) << sk::shape_to_string(tensor.shape())
              << std::right << std::setw(10) << (masked ? it->second.nonzeros : tensor.size()) << std::setw(10)
              << tensor.size() << std::setw(10) << (masked ? it->second.sparsity() : 0.0)
              << (masked ? "" : "  (dense)") << '\n';
  }
  std::cout << "masked sparsity " << summary.masked.sparsity() << " (" << summary.masked.nonzeros << "/"
            << summary.masked.size << " nonzero)\n";
  std::cout << "total sparsity  " << summary.total.sparsity() << " (" << summary.total.nonzeros << "/"
            << summary.total.size << " nonzero)\n";
  return 0;
}

int run_compare(const std::string& matrix_path, const std::string& out, std::size_t jobs) {
  sk::ConfigMatrix matrix = sk::load_config_matrix(matrix_path);
  if (jobs > 0) matrix.max_parallel = jobs;
  const auto cells = sk::run_compare(matrix);
  const std::string csv = sk::compare_csv(matrix, cells);
  std::ofstream file(out);
  if (!file) throw sk::ConfigError("cannot write " + out);
  file << csv;
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse training and pruning experiments"};
  app.require_subcommand(1);

  std::string config_path, resume, metrics, checkpoint_out;
  std::int64_t stop_after = 0;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train one experiment arm from a JSON config");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--resume", resume, "Resume from this checkpoint directory");
  train->add_option("--stop-after", stop_after, "Stop and checkpoint after this many steps");
  train->add_option("--metrics", metrics, "Override the metrics JSON-lines path");
  train->add_option("--checkpoint-out", checkpoint_out, "Override the checkpoint directory");
  train->add_flag("--quiet", quiet, "Do not echo metrics to stdout");

  std::string prune_ckpt, prune_out, algorithm = "mag", structure = "unstructured", distribution = "uniform";
  std::optional<double> sparsity;
  bool packed = false;
  std::uint64_t prune_seed = 0;
  auto* prune = app.add_subcommand("prune", "One-shot prune the parameters of a checkpoint");
  prune->add_option("--checkpoint", prune_ckpt, "Source checkpoint directory")->required();
  prune->add_option("--out", prune_out, "Destination directory (default: <checkpoint>-pruned)");
  prune->add_option("--algorithm", algorithm, "Scoring algorithm (mag, rand, mag-g, ste, static, set)");
  prune->add_option("--sparsity", sparsity, "Target sparsity in [0, 1)");
  prune->add_option("--structure", structure, "unstructured, N:M (e.g. 2:4) or RxC blocks (e.g. 4x4)");
  prune->add_option("--distribution", distribution, "uniform or erk");
  prune->add_flag("--packed", packed, "Store bit-packed masks");
  prune->add_option("--seed", prune_seed, "Seed for random criteria");

  std::string inspect_ckpt;
  bool inspect_json = false;
  auto* inspect = app.add_subcommand("inspect", "Print the sparsity summary of a checkpoint");
  inspect->add_option("--checkpoint", inspect_ckpt, "Checkpoint directory")->required();
  inspect->add_flag("--json", inspect_json, "Emit JSON instead of a table");

  std::string matrix_path, compare_out = "results.csv";
  std::size_t jobs = 0;
  auto* compare = app.add_subcommand("compare", "Run an {algorithm x sparsity x seed} grid");
  compare->add_option("--config-matrix", matrix_path, "Grid definition (JSON)")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", compare_out, "CSV output path");
  compare->add_option("--jobs", jobs, "Parallel runs (default: hardware threads)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage_error", e.what());
    return 2;
  }

  try {
    if (*train) return run_train(config_path, resume, stop_after, metrics, checkpoint_out, quiet);
    if (*prune) {
      if (prune_out.empty()) {
        std::string base = prune_ckpt;
        while (base.size() > 1 && base.back() == '/') base.pop_back();
        prune_out = base + "-pruned";
      }
      return run_prune(prune_ckpt, prune_out, algorithm, sparsity, structure, distribution, packed, prune_seed);
    }
    if (*inspect) return run_inspect(inspect_ckpt, inspect_json);
    if (*compare) return run_compare(matrix_path, compare_out, jobs);
  } catch (const sk::Error& e) {
    print_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal_error", e.what());
    return 1;
  }
  return 1;
}
