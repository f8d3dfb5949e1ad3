#include "sparsekit/algorithms.hpp"

#include <cmath>
#include <numbers>

namespace sparsekit {

std::string to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::kRandomPrune: return "random_prune";
    case AlgorithmKind::kMagnitudePrune: return "magnitude_prune";
    case AlgorithmKind::kSaliencyPrune: return "saliency_prune";
    case AlgorithmKind::kGlobalMagnitudePrune: return "global_magnitude_prune";
    case AlgorithmKind::kSteMagnitude: return "ste_magnitude";
    case AlgorithmKind::kStaticSparse: return "static_sparse";
    case AlgorithmKind::kSetSparse: return "set_sparse";
    case AlgorithmKind::kRigLSparse: return "rigl_sparse";
  }
  return "unknown";
}

AlgorithmKind parse_algorithm(const std::string& name) {
  static const std::map<std::string, AlgorithmKind> names = {
      {"random_prune", AlgorithmKind::kRandomPrune},
      {"rand", AlgorithmKind::kRandomPrune},
      {"magnitude_prune", AlgorithmKind::kMagnitudePrune},
      {"mag", AlgorithmKind::kMagnitudePrune},
      {"saliency_prune", AlgorithmKind::kSaliencyPrune},
      {"sal", AlgorithmKind::kSaliencyPrune},
      {"global_magnitude_prune", AlgorithmKind::kGlobalMagnitudePrune},
      {"mag-g", AlgorithmKind::kGlobalMagnitudePrune},
      {"mag_g", AlgorithmKind::kGlobalMagnitudePrune},
      {"ste_magnitude", AlgorithmKind::kSteMagnitude},
      {"ste", AlgorithmKind::kSteMagnitude},
      {"static_sparse", AlgorithmKind::kStaticSparse},
      {"static", AlgorithmKind::kStaticSparse},
      {"set_sparse", AlgorithmKind::kSetSparse},
      {"set", AlgorithmKind::kSetSparse},
      {"rigl_sparse", AlgorithmKind::kRigLSparse},
      {"rigl", AlgorithmKind::kRigLSparse},
  };
  auto it = names.find(name);
  if (it == names.end()) throw ConfigError("unknown algorithm '" + name + "'");
  return it->second;
}

bool requires_gradients(AlgorithmKind kind) {
  return kind == AlgorithmKind::kSaliencyPrune || kind == AlgorithmKind::kRigLSparse ||
         kind == AlgorithmKind::kSteMagnitude;
}

bool is_gradual_pruning(AlgorithmKind kind) {
  return kind == AlgorithmKind::kRandomPrune || kind == AlgorithmKind::kMagnitudePrune ||
         kind == AlgorithmKind::kSaliencyPrune || kind == AlgorithmKind::kGlobalMagnitudePrune;
}

bool is_sparse_training(AlgorithmKind kind) {
  return kind == AlgorithmKind::kStaticSparse || kind == AlgorithmKind::kSetSparse ||
         kind == AlgorithmKind::kRigLSparse;
}

void DropGrowConfig::validate() const {
  if (!(initial_drop_fraction > 0.0 && initial_drop_fraction < 1.0)) {
    throw ConfigError("initial drop fraction must lie in (0, 1)");
  }
}

void UpdaterConfig::validate() const {
  distribution.validate();
  schedule.validate();
  structure.validate();
  drop_grow.validate();

  if (distribution.kind != DistributionKind::kCustomMap &&
      std::abs(schedule.final_sparsity - distribution.target_sparsity) > 1e-12) {
    throw ConfigError("schedule final sparsity " + std::to_string(schedule.final_sparsity) +
                      " differs from distribution target " + std::to_string(distribution.target_sparsity));
  }
  if (structure.fixes_sparsity() && distribution.kind != DistributionKind::kCustomMap &&
      std::abs(distribution.target_sparsity - structure.implied_sparsity()) > 1e-9) {
    throw ConfigError("N:M structure " + to_string(structure) + " implies sparsity " +
                      std::to_string(structure.implied_sparsity()) + " but the target is " +
                      std::to_string(distribution.target_sparsity));
  }
  if (algorithm == AlgorithmKind::kGlobalMagnitudePrune && structure.kind != StructureKind::kUnstructured) {
    throw ConfigError("global magnitude pruning only supports unstructured sparsity");
  }
  if ((algorithm == AlgorithmKind::kSetSparse || algorithm == AlgorithmKind::kRigLSparse)) {
    if (structure.kind != StructureKind::kUnstructured) {
      throw ConfigError(to_string(algorithm) + " only supports unstructured sparsity");
    }
    if (schedule.kind != ScheduleKind::kNoUpdate && schedule.kind != ScheduleKind::kOneShot &&
        schedule.end_step <= 0) {
      throw ConfigError(to_string(algorithm) + " needs a schedule end_step > 0 for the drop fraction decay");
    }
  }
}

bool SparsityState::equals(const StateExtension& other) const {
  const auto* o = dynamic_cast<const SparsityState*>(&other);
  if (o == nullptr || o->targets != targets || o->algo_slots != algo_slots) return false;
  if (o->masks.size() != masks.size()) return false;
  for (const auto& [path, mask] : masks) {
    auto it = o->masks.find(path);
    if (it == o->masks.end() || !it->second.identical(mask)) return false;
  }
  return true;
}

ParamTree score(AlgorithmKind kind, const ParamTree& params, const ParamTree* grads,
                const std::optional<RngKey>& key) {
  switch (kind) {
    case AlgorithmKind::kMagnitudePrune:
    case AlgorithmKind::kGlobalMagnitudePrune:
    case AlgorithmKind::kSteMagnitude:
    case AlgorithmKind::kSetSparse:
      return tree_map([](double w) { return std::abs(w); }, params);
    case AlgorithmKind::kSaliencyPrune:
      if (grads == nullptr) throw ArgumentError("saliency scores need gradients");
      return tree_map([](double w, double g) { return std::abs(w * g); }, params, *grads);
    case AlgorithmKind::kRandomPrune:
    case AlgorithmKind::kStaticSparse: {
      if (!key) throw ArgumentError(to_string(kind) + " scores need a random key");
      ParamTree out;
      for (const auto& [path, tensor] : params) {
        out.set(path, Tensor(tensor.shape(), uniform_samples(derive_key(*key, path), tensor.size())));
      }
      return out;
    }
    case AlgorithmKind::kRigLSparse: break;
  }
  throw ArgumentError(to_string(kind) + " has no weight score");
}

MaskTree global_magnitude_masks(const ParamTree& params, const std::vector<std::string>& paths, double sparsity,
                                MaskEncoding encoding) {
  std::vector<double> flat;
  std::vector<std::size_t> offsets;
  for (const auto& path : paths) {
    const Tensor& w = params.at(path);
    const double norm = l2_norm(w);
    offsets.push_back(flat.size());
    for (double v : w.data()) flat.push_back(norm > 0.0 ? std::abs(v) / norm : 0.0);
  }
  const std::size_t keep = flat.size() - zero_count(sparsity, flat.size());
  std::vector<std::uint8_t> kept(flat.size(), 0);
  for (std::size_t idx : topk_indices(flat, keep)) kept[idx] = 1;

  MaskTree out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Tensor& w = params.at(paths[i]);
    const auto first = kept.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
    out.emplace(paths[i], Mask(w.shape(), std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(w.size())),
                               encoding));
  }
  return out;
}

namespace {

std::vector<std::string> masked_paths(const SparsityMap& targets) {
  std::vector<std::string> out;
  for (const auto& [path, _] : targets) out.push_back(path);
  return out;
}

ParamTree subtree(const ParamTree& tree, const SparsityMap& targets) {
  ParamTree out;
  for (const auto& [path, _] : targets) out.set(path, tree.at(path));
  return out;
}

}  // namespace

MaskTree gradual_prune_update(const UpdaterConfig& cfg, const SparsityState& state, const ParamTree& params,
                              const ParamTree* grads, std::int64_t step) {
  if (cfg.algorithm == AlgorithmKind::kGlobalMagnitudePrune) {
    const double s = current_sparsity(cfg.schedule, step, cfg.distribution.target_sparsity);
    return global_magnitude_masks(params, masked_paths(state.targets), s, cfg.mask_encoding());
  }
  const RngKey key = derive_key(derive_key(cfg.root_key(), "random_prune"), static_cast<std::uint64_t>(step));
  const ParamTree sub_grads = grads != nullptr ? subtree(*grads, state.targets) : ParamTree{};
  const ParamTree scores = score(cfg.algorithm, subtree(params, state.targets),
                                 grads != nullptr ? &sub_grads : nullptr, key);
  MaskTree out;
  for (const auto& [path, target] : state.targets) {
    const double s = current_sparsity(cfg.schedule, step, target);
    out.emplace(path, Mask::from_tensor(structured_mask(scores.at(path), s, cfg.structure, path), cfg.mask_encoding()));
  }
  return out;
}

MaskTree ste_masks(const UpdaterConfig& cfg, const SparsityMap& targets, const ParamTree& params,
                   std::int64_t step) {
  MaskTree out;
  for (const auto& [path, target] : targets) {
    const Tensor& w = params.at(path);
    Tensor scores = w;
    for (double& v : scores.data()) v = std::abs(v);
    const double s = current_sparsity(cfg.schedule, step, target);
    out.emplace(path, Mask::from_tensor(structured_mask(scores, s, cfg.structure, path), cfg.mask_encoding()));
  }
  return out;
}

ParamTree ste_forward_projection(const UpdaterConfig& cfg, const SparsityState& state, const ParamTree& params,
                                 std::int64_t step) {
  return apply_masks(params, ste_masks(cfg, state.targets, params, step));
}

double drop_fraction(const DropGrowConfig& cfg, std::int64_t step, std::int64_t end_step) {
  if (end_step <= 0) throw ConfigError("drop fraction decay needs end_step > 0");
  if (step < 0) throw ArgumentError("step must be non-negative");
  const double progress = static_cast<double>(std::min(step, end_step)) / static_cast<double>(end_step);
  return cfg.initial_drop_fraction / 2.0 * (1.0 + std::cos(std::numbers::pi * progress));
}

MaskChange drop_grow_with_fraction(AlgorithmKind kind, const MaskTree& masks, const ParamTree& params,
                                   const ParamTree* grads, double fraction, const RngKey& key) {
  if (kind != AlgorithmKind::kSetSparse && kind != AlgorithmKind::kRigLSparse) {
    throw ArgumentError("drop/grow applies to SET and RigL only");
  }
  if (kind == AlgorithmKind::kRigLSparse && grads == nullptr) throw ArgumentError("RigL growth needs gradients");

  MaskChange change;
  for (const auto& [path, mask] : masks) {
    const Tensor& w = params.at(path);
    std::vector<std::uint8_t> bits = mask.to_bytes();
    std::vector<std::size_t> active;
    std::vector<std::size_t> inactive;
    for (std::size_t i = 0; i < bits.size(); ++i) (bits[i] ? active : inactive).push_back(i);

    const std::size_t k = std::min(zero_count(fraction, active.size()), inactive.size());

    // Drop: smallest magnitudes among active coordinates, lower index first on ties.
    std::vector<double> drop_scores(active.size());
    for (std::size_t j = 0; j < active.size(); ++j) drop_scores[j] = -std::abs(w[active[j]]);
    std::vector<std::size_t> dropped;
    for (std::size_t j : topk_indices(drop_scores, k)) dropped.push_back(active[j]);

    // Grow: only coordinates that were inactive before this update.
    std::vector<double> grow_scores(inactive.size());
    if (kind == AlgorithmKind::kRigLSparse) {
      const Tensor& g = grads->at(path);
      for (std::size_t j = 0; j < inactive.size(); ++j) grow_scores[j] = std::abs(g[inactive[j]]);
    } else {
      const RngKey layer_key = derive_key(key, path);
      for (std::size_t j = 0; j < inactive.size(); ++j) grow_scores[j] = uniform_at(layer_key, j);
    }
    std::vector<std::size_t> grown;
    for (std::size_t j : topk_indices(grow_scores, k)) grown.push_back(inactive[j]);

    for (std::size_t i : dropped) bits[i] = 0;
    for (std::size_t i : grown) bits[i] = 1;
    change.masks.emplace(path, Mask(mask.shape(), std::move(bits), mask.encoding()));
    change.dropped[path] = std::move(dropped);
    change.grown[path] = std::move(grown);
  }
  return change;
}

MaskChange drop_grow_update(const UpdaterConfig& cfg, const SparsityState& state, const ParamTree& params,
                            const ParamTree* grads, std::int64_t step) {
  const double fraction = drop_fraction(cfg.drop_grow, step, cfg.schedule.end_step);
  const RngKey key = derive_key(derive_key(cfg.root_key(), "set_grow"), static_cast<std::uint64_t>(step));
  return drop_grow_with_fraction(cfg.algorithm, state.masks, params, grads, fraction, key);
}

MaskTree static_init(const UpdaterConfig& cfg, const SparsityMap& targets, const ParamTree& params) {
  const RngKey key = derive_key(cfg.root_key(), "static_init");
  MaskTree out;
  for (const auto& [path, target] : targets) {
    const Tensor& w = params.at(path);
    Tensor scores(w.shape(), uniform_samples(derive_key(key, path), w.size()));
    out.emplace(path, Mask::from_tensor(structured_mask(scores, target, cfg.structure, path), cfg.mask_encoding()));
  }
  return out;
}

}  // namespace sparsekit
