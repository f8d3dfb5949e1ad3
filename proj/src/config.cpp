#include "sparsekit/config.hpp"

#include <cstdlib>
#include <fstream>

namespace sparsekit {

using nlohmann::json;

GradientTransformation OptimizerSpec::build() const {
  if (name == "adam") return adam(learning_rate, beta1, beta2, epsilon);
  if (name == "sgd") return sgd(learning_rate);
  throw ConfigError("unknown optimizer '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (layer_dims.size() < 2) throw ConfigError("model.layer_dims needs at least two entries");
  dataset.validate();
  if (layer_dims.front() != dataset.n_features) {
    throw ConfigError("model input dimension " + std::to_string(layer_dims.front()) + " does not match " +
                      std::to_string(dataset.n_features) + " dataset features");
  }
  if (layer_dims.back() != dataset.n_classes) {
    throw ConfigError("model output dimension " + std::to_string(layer_dims.back()) + " does not match " +
                      std::to_string(dataset.n_classes) + " dataset classes");
  }
  if (total_steps <= 0) throw ConfigError("total_steps must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (eval_every <= 0) throw ConfigError("eval_every must be positive");
  (void)optimizer.build();
  if (sparsity) {
    sparsity->validate();
    const ScheduleConfig& s = sparsity->schedule;
    const bool uses_end = s.kind == ScheduleKind::kPeriodic || s.kind == ScheduleKind::kPolynomial;
    if (uses_end && s.end_step > total_steps) {
      throw ConfigError("schedule end_step " + std::to_string(s.end_step) + " exceeds total_steps " +
                        std::to_string(total_steps));
    }
  }
}

void ExperimentConfig::set_seed(std::uint64_t value) {
  seed = value;
  if (!dataset_seed_explicit) dataset.seed = value;
  if (sparsity) sparsity->rng_seed = value;
}

ScheduleConfig default_schedule(AlgorithmKind kind, std::int64_t total_steps, double sparsity) {
  ScheduleConfig cfg;
  cfg.final_sparsity = sparsity;
  if (kind == AlgorithmKind::kStaticSparse) return cfg;
  cfg.begin_step = 0;
  cfg.end_step = std::max<std::int64_t>(1, total_steps * 3 / 4);
  cfg.frequency = std::max<std::int64_t>(1, total_steps / 20);
  cfg.kind = is_sparse_training(kind) ? ScheduleKind::kPeriodic : ScheduleKind::kPolynomial;
  return cfg;
}

namespace {

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

const json& object_or_empty(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key) || j.at(key).is_null()) return empty;
  if (!j.at(key).is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
  return j.at(key);
}

}  // namespace

ScheduleConfig parse_schedule(const json& j, double sparsity) {
  ScheduleConfig cfg;
  cfg.kind = parse_schedule_kind(value_or<std::string>(j, "kind", "no_update"));
  cfg.begin_step = value_or<std::int64_t>(j, "begin_step", 0);
  cfg.end_step = value_or<std::int64_t>(j, "end_step", cfg.begin_step);
  cfg.frequency = value_or<std::int64_t>(j, "frequency", 1);
  cfg.initial_sparsity = value_or<double>(j, "initial_sparsity", 0.0);
  cfg.final_sparsity = value_or<double>(j, "final_sparsity", sparsity);
  cfg.power = value_or<double>(j, "power", 3.0);
  cfg.validate();
  return cfg;
}

DistributionSpec parse_distribution(const json& j) {
  DistributionSpec spec;
  spec.kind = parse_distribution_kind(value_or<std::string>(j, "kind", "uniform"));
  spec.target_sparsity = value_or<double>(j, "sparsity", 0.0);
  spec.custom = value_or<std::map<std::string, double>>(j, "custom", {});
  spec.exclude = value_or<std::vector<std::string>>(j, "exclude", {});
  spec.validate();
  return spec;
}

StructureSpec parse_structure_json(const json& j) {
  if (j.is_null()) return StructureSpec::unstructured();
  if (j.is_string()) return parse_structure(j.get<std::string>());
  const std::string kind = value_or<std::string>(j, "kind", "unstructured");
  if (kind == "unstructured") return StructureSpec::unstructured();
  if (kind == "n_by_m") return StructureSpec::n_by_m(value_or<std::size_t>(j, "n", 0), value_or<std::size_t>(j, "m", 0));
  if (kind == "block") {
    const auto dims = value_or<std::vector<std::size_t>>(j, "block_dims", {});
    if (dims.size() != 2) throw ConfigError("block structure needs block_dims of length 2");
    return StructureSpec::block(dims[0], dims[1]);
  }
  throw ConfigError("unknown structure kind '" + kind + "'");
}

UpdaterConfig parse_updater(const json& j, std::int64_t total_steps, std::uint64_t seed) {
  UpdaterConfig cfg;
  cfg.algorithm = parse_algorithm(value_or<std::string>(j, "algorithm", "magnitude_prune"));
  json dist = object_or_empty(j, "distribution");
  if (!dist.contains("sparsity") && j.contains("sparsity")) dist["sparsity"] = j.at("sparsity");
  cfg.structure = parse_structure_json(j.contains("structure") ? j.at("structure") : json());
  if (!dist.contains("sparsity") && cfg.structure.fixes_sparsity()) dist["sparsity"] = cfg.structure.implied_sparsity();
  cfg.distribution = parse_distribution(dist);
  if (j.contains("schedule") && !j.at("schedule").is_null()) {
    cfg.schedule = parse_schedule(j.at("schedule"), cfg.distribution.target_sparsity);
  } else {
    cfg.schedule = default_schedule(cfg.algorithm, total_steps, cfg.distribution.target_sparsity);
  }
  cfg.drop_grow.initial_drop_fraction = value_or<double>(j, "drop_fraction", 0.1);
  cfg.use_packed_masks = value_or<bool>(j, "use_packed_masks", false);
  cfg.rng_seed = value_or<std::uint64_t>(j, "rng_seed", seed);
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_experiment(const json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig cfg;
  cfg.seed = value_or<std::uint64_t>(j, "seed", 0);

  const json& model = object_or_empty(j, "model");
  cfg.layer_dims = value_or<std::vector<std::size_t>>(model, "layer_dims", cfg.layer_dims);

  const json& data = object_or_empty(j, "dataset");
  cfg.dataset.generator = value_or<std::string>(data, "generator", cfg.dataset.generator);
  cfg.dataset.n_samples = value_or<std::size_t>(data, "n_samples", cfg.dataset.n_samples);
  cfg.dataset.n_features = value_or<std::size_t>(data, "n_features", cfg.dataset.n_features);
  cfg.dataset.n_classes = value_or<std::size_t>(data, "n_classes", cfg.dataset.n_classes);
  cfg.dataset.noise = value_or<double>(data, "noise", cfg.dataset.noise);
  cfg.dataset.eval_fraction = value_or<double>(data, "eval_fraction", cfg.dataset.eval_fraction);
  cfg.dataset_seed_explicit = data.contains("seed");
  cfg.dataset.seed = value_or<std::uint64_t>(data, "seed", cfg.seed);

  const json& opt = object_or_empty(j, "optimizer");
  cfg.optimizer.name = value_or<std::string>(opt, "name", cfg.optimizer.name);
  cfg.optimizer.learning_rate = value_or<double>(opt, "learning_rate", cfg.optimizer.learning_rate);
  cfg.optimizer.beta1 = value_or<double>(opt, "beta1", cfg.optimizer.beta1);
  cfg.optimizer.beta2 = value_or<double>(opt, "beta2", cfg.optimizer.beta2);
  cfg.optimizer.epsilon = value_or<double>(opt, "epsilon", cfg.optimizer.epsilon);

  const json& training = object_or_empty(j, "training");
  cfg.total_steps = value_or<std::int64_t>(training, "total_steps", cfg.total_steps);
  cfg.batch_size = value_or<std::size_t>(training, "batch_size", cfg.batch_size);
  cfg.eval_every = value_or<std::int64_t>(training, "eval_every", cfg.eval_every);

  if (j.contains("sparsity") && !j.at("sparsity").is_null()) {
    const json& sp = j.at("sparsity");
    if (!sp.is_object()) throw ConfigError("'sparsity' must be an object");
    if (value_or<std::string>(sp, "algorithm", "") != "dense") {
      cfg.sparsity = parse_updater(sp, cfg.total_steps, cfg.seed);
    }
  }

  const json& output = object_or_empty(j, "output");
  cfg.metrics_path = value_or<std::string>(output, "metrics", "");
  cfg.checkpoint_path = value_or<std::string>(output, "checkpoint", "");

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
  return parse_experiment(j);
}

json to_json(const ScheduleConfig& cfg) {
  return json{{"kind", to_string(cfg.kind)},           {"begin_step", cfg.begin_step},
              {"end_step", cfg.end_step},               {"frequency", cfg.frequency},
              {"initial_sparsity", cfg.initial_sparsity}, {"final_sparsity", cfg.final_sparsity},
              {"power", cfg.power}};
}

json to_json(const StructureSpec& spec) {
  switch (spec.kind) {
    case StructureKind::kUnstructured: return json{{"kind", "unstructured"}};
    case StructureKind::kNByM: return json{{"kind", "n_by_m"}, {"n", spec.n}, {"m", spec.m}};
    case StructureKind::kBlock:
      return json{{"kind", "block"}, {"block_dims", {spec.block_dims.first, spec.block_dims.second}}};
  }
  return json();
}

json to_json(const DistributionSpec& spec) {
  json out{{"kind", to_string(spec.kind)}, {"sparsity", spec.target_sparsity}, {"exclude", spec.exclude}};
  if (!spec.custom.empty()) out["custom"] = spec.custom;
  return out;
}

json to_json(const UpdaterConfig& cfg) {
  return json{{"algorithm", to_string(cfg.algorithm)},
              {"distribution", to_json(cfg.distribution)},
              {"schedule", to_json(cfg.schedule)},
              {"structure", to_json(cfg.structure)},
              {"drop_fraction", cfg.drop_grow.initial_drop_fraction},
              {"use_packed_masks", cfg.use_packed_masks},
              {"rng_seed", cfg.rng_seed}};
}

json to_json(const ExperimentConfig& cfg) {
  json dataset{{"generator", cfg.dataset.generator}, {"n_samples", cfg.dataset.n_samples},
               {"n_features", cfg.dataset.n_features}, {"n_classes", cfg.dataset.n_classes},
               {"noise", cfg.dataset.noise},           {"eval_fraction", cfg.dataset.eval_fraction}};
  if (cfg.dataset_seed_explicit) dataset["seed"] = cfg.dataset.seed;
  json out{{"seed", cfg.seed},
           {"model", {{"layer_dims", cfg.layer_dims}}},
           {"dataset", dataset},
           {"optimizer",
            {{"name", cfg.optimizer.name},
             {"learning_rate", cfg.optimizer.learning_rate},
             {"beta1", cfg.optimizer.beta1},
             {"beta2", cfg.optimizer.beta2},
             {"epsilon", cfg.optimizer.epsilon}}},
           {"training",
            {{"total_steps", cfg.total_steps}, {"batch_size", cfg.batch_size}, {"eval_every", cfg.eval_every}}},
           {"output", {{"metrics", cfg.metrics_path.string()}, {"checkpoint", cfg.checkpoint_path.string()}}}};
  out["sparsity"] = cfg.sparsity ? to_json(*cfg.sparsity) : json();
  return out;
}

void apply_env_overrides(ExperimentConfig& cfg) {
  const char* seed = std::getenv("SPARSEKIT_SEED");
  if (seed == nullptr || *seed == '\0') return;
  try {
    std::size_t used = 0;
    const auto value = std::stoull(seed, &used);
    if (used != std::string(seed).size()) throw std::invalid_argument("trailing characters");
    cfg.set_seed(value);
  } catch (const std::exception&) {
    throw ConfigError(std::string("SPARSEKIT_SEED must be an unsigned integer, got '") + seed + "'");
  }
}

}  // namespace sparsekit
