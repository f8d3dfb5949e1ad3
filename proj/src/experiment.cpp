#include "sparsekit/experiment.hpp"

#include <cmath>
#include <fstream>
#include <atomic>
#include <future>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "sparsekit/checkpoint.hpp"

namespace sparsekit {

using nlohmann::json;

namespace {

std::string hash_of(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output");
  return config_hash(j.dump());
}

json sparsity_record(const SparsitySummary& summary) {
  json per_layer = json::object();
  for (const auto& [path, stats] : summary.per_path) per_layer[path] = stats.sparsity();
  return json{{"per_layer_sparsity", per_layer},
              {"total_sparsity", summary.total.sparsity()},
              {"masked_sparsity", summary.masked.sparsity()}};
}

}  // namespace

std::string metrics_line(const json& record) { return record.dump(); }

void save_training_checkpoint(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                              const TrainResult& result) {
  Checkpoint c;
  c.params = result.params;
  c.state = result.state;
  c.step = result.step;
  c.config_hash = hash_of(cfg);
  c.metadata = json{{"config", to_json(cfg)}};
  save_checkpoint(dir, c);
}

TrainResult train(const ExperimentConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  const Mlp model(cfg.layer_dims);
  const DataSplit data = split_dataset(generate_dataset(cfg.dataset), cfg.dataset.eval_fraction);
  if (data.train.rows == 0) throw ConfigError("dataset leaves no training samples");
  const RngKey root{cfg.seed, 0};

  std::optional<Updater> updater;
  GradientTransformation tx = cfg.optimizer.build();
  if (cfg.sparsity) {
    updater.emplace(*cfg.sparsity);
    tx = updater->wrap_optimizer(std::move(tx));
  }

  TrainResult result;
  if (options.resume_from) {
    Checkpoint c = load_checkpoint(*options.resume_from);
    if (c.config_hash != hash_of(cfg)) {
      throw CheckpointError("checkpoint " + options.resume_from->string() + " was written for a different config");
    }
    result.params = std::move(c.params);
    result.state = std::move(c.state);
    result.step = c.step;
  } else {
    result.params = model.init(derive_key(root, "init"));
    result.state = tx.init(result.params);
    if (updater) result.params = updater->post_gradient_update(result.params, result.state);
  }

  std::ofstream metrics_file;
  if (options.write_files && !cfg.metrics_path.empty()) {
    if (cfg.metrics_path.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(cfg.metrics_path.parent_path(), ec);
    }
    metrics_file.open(cfg.metrics_path, options.resume_from ? std::ios::app : std::ios::trunc);
    if (!metrics_file) throw ConfigError("cannot open metrics file " + cfg.metrics_path.string());
  }

  auto forward_params = [&](const ParamTree& params, const OptState& state) {
    return updater ? updater->pre_forward_update(params, state) : params;
  };
  auto summarize = [&]() {
    return updater ? sparsity_summary(sparsity_state(result.state).masks, result.params)
                   : sparsity_summary(MaskTree{}, result.params);
  };

  const RngKey batch_key = derive_key(root, "batch");
  const std::int64_t stop = options.stop_after ? std::min(*options.stop_after, cfg.total_steps) : cfg.total_steps;
  std::vector<std::size_t> indices(cfg.batch_size);

  for (std::int64_t t = result.step; t < stop; ++t) {
    RngStream rng(derive_key(batch_key, static_cast<std::uint64_t>(t)));
    for (auto& idx : indices) idx = rng.below(data.train.rows);
    const Batch batch = gather_rows(data.train, indices);

    const ParamTree forward = forward_params(result.params, result.state);
    Mlp::LossAndGrads lg = model.loss_and_grads(forward, batch);
    if (!std::isfinite(lg.loss)) {
      throw NumericError("non-finite training loss at step " + std::to_string(t) + " (loss=" +
                         std::to_string(lg.loss) + ")");
    }
    UpdateResult r = tx.update(lg.grads, result.state, result.params);
    result.params = apply_updates(result.params, r.updates);
    result.state = std::move(r.state);
    if (updater) result.params = updater->post_gradient_update(result.params, result.state);
    result.step = t + 1;

    if (result.step % cfg.eval_every == 0 || result.step == cfg.total_steps) {
      result.summary = summarize();
      result.final_eval_accuracy =
          data.eval.rows > 0 ? model.accuracy(forward_params(result.params, result.state), data.eval) : 0.0;
      json record{{"step", result.step}, {"train_loss", lg.loss}, {"eval_accuracy", result.final_eval_accuracy}};
      record.update(sparsity_record(result.summary));
      const std::string line = metrics_line(record);
      if (metrics_file.is_open()) metrics_file << line << '\n';
      if (options.metrics_sink != nullptr) *options.metrics_sink << line << '\n';
      result.metrics.push_back(std::move(record));
    }
  }
  result.summary = summarize();
  if (metrics_file.is_open()) metrics_file.flush();
  if (options.write_files && !cfg.checkpoint_path.empty()) save_training_checkpoint(cfg.checkpoint_path, cfg, result);
  return result;
}

ConfigMatrix parse_config_matrix(const json& j) {
  if (!j.is_object() || !j.contains("base")) throw ConfigError("config matrix needs a 'base' experiment");
  ConfigMatrix m;
  try {
    json base = j.at("base");
    if (base.contains("sparsity") && base.at("sparsity").is_object()) m.base_sparsity = base.at("sparsity");
    base.erase("sparsity");
    m.base = parse_experiment(base);
    m.algorithms = j.at("algorithms").get<std::vector<std::string>>();
    m.sparsities = j.at("sparsities").get<std::vector<double>>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("schedules")) m.schedules = j.at("schedules").get<std::map<std::string, json>>();
    m.max_parallel = j.value("max_parallel", std::size_t{0});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config matrix: ") + e.what());
  }
  if (m.algorithms.empty() || m.sparsities.empty() || m.seeds.empty()) {
    throw ConfigError("config matrix needs non-empty algorithms, sparsities and seeds");
  }
  for (const auto& name : m.algorithms) {
    if (name != "dense") (void)parse_algorithm(name);
  }
  return m;
}

ConfigMatrix load_config_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config matrix " + path.string());
  try {
    return parse_config_matrix(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse config matrix " + path.string() + ": " + e.what());
  }
}

ExperimentConfig make_cell_config(const ConfigMatrix& matrix, const std::string& algorithm, double sparsity,
                                  std::uint64_t seed) {
  ExperimentConfig cfg = matrix.base;
  cfg.metrics_path.clear();
  cfg.checkpoint_path.clear();
  cfg.sparsity.reset();
  if (algorithm != "dense") {
    json sp = matrix.base_sparsity;
    sp["algorithm"] = algorithm;
    sp["sparsity"] = sparsity;
    if (sp.contains("distribution")) sp["distribution"]["sparsity"] = sparsity;
    sp.erase("rng_seed");
    const std::string canonical = to_string(parse_algorithm(algorithm));
    if (auto it = matrix.schedules.find(algorithm); it != matrix.schedules.end()) {
      sp["schedule"] = it->second;
    } else if (auto it2 = matrix.schedules.find(canonical); it2 != matrix.schedules.end()) {
      sp["schedule"] = it2->second;
    } else {
      sp.erase("schedule");
    }
    if (sp.contains("schedule")) sp["schedule"]["final_sparsity"] = sparsity;
    cfg.sparsity = parse_updater(sp, cfg.total_steps, seed);
  }
  cfg.set_seed(seed);
  cfg.validate();
  return cfg;
}

double CellResult::mean() const {
  if (accuracies.empty()) return 0.0;
  return std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / static_cast<double>(accuracies.size());
}

double CellResult::stddev() const {
  if (accuracies.size() < 2) return 0.0;
  const double mu = mean();
  double ss = 0.0;
  for (double a : accuracies) ss += (a - mu) * (a - mu);
  return std::sqrt(ss / static_cast<double>(accuracies.size() - 1));
}

std::vector<CellResult> run_compare(const ConfigMatrix& matrix) {
  struct Job {
    std::size_t cell;
    std::size_t seed_index;
    ExperimentConfig cfg;
  };
  std::vector<CellResult> cells;
  std::vector<Job> jobs;
  for (const auto& algorithm : matrix.algorithms) {
    for (double s : matrix.sparsities) {
      CellResult cell{algorithm, s, std::vector<double>(matrix.seeds.size(), 0.0)};
      for (std::size_t k = 0; k < matrix.seeds.size(); ++k) {
        jobs.push_back(Job{cells.size(), k, make_cell_config(matrix, algorithm, s, matrix.seeds[k])});
      }
      cells.push_back(std::move(cell));
    }
  }

  std::size_t workers = matrix.max_parallel != 0 ? matrix.max_parallel : std::thread::hardware_concurrency();
  workers = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      TrainOptions options;
      options.write_files = false;
      const TrainResult r = train(jobs[i].cfg, options);
      cells[jobs[i].cell].accuracies[jobs[i].seed_index] = r.final_eval_accuracy;
    }
  };
  std::vector<std::future<void>> running;
  for (std::size_t w = 0; w < workers; ++w) running.push_back(std::async(std::launch::async, worker));
  for (auto& f : running) f.get();
  return cells;
}

std::string compare_csv(const ConfigMatrix& matrix, const std::vector<CellResult>& cells) {
  std::ostringstream os;
  os << "algorithm";
  for (double s : matrix.sparsities) os << ",acc_mean@" << s << ",acc_std@" << s;
  os << ",n_seeds\n";
  os << std::setprecision(6) << std::fixed;
  for (const auto& algorithm : matrix.algorithms) {
    os << algorithm;
    for (double s : matrix.sparsities) {
      for (const auto& cell : cells) {
        if (cell.algorithm == algorithm && cell.sparsity == s) os << ',' << cell.mean() << ',' << cell.stddev();
      }
    }
    os << ',' << matrix.seeds.size() << '\n';
  }
  return os.str();
}

}  // namespace sparsekit
