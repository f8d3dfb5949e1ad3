#include "sparsekit/engine.hpp"

#include <cmath>

namespace sparsekit {

const SparsityState& sparsity_state(const OptState& state) {
  const auto* ss = dynamic_cast<const SparsityState*>(state.extension.get());
  if (ss == nullptr) throw ArgumentError("optimizer state carries no sparsity state; was the optimizer wrapped?");
  return *ss;
}

Updater::Updater(UpdaterConfig config) : config_(std::make_shared<const UpdaterConfig>(std::move(config))) {
  config_->validate();
}

SparsityMap Updater::layer_targets(const ParamTree& params) const {
  const SparsityMap all = compute_distribution(config_->distribution, params);
  SparsityMap out;
  for (const auto& [path, tensor] : params) {
    if (config_->distribution.sparsifies(path, tensor.shape())) out[path] = all.at(path);
  }
  return out;
}

namespace {

// Updates that land every masked coordinate (and every coordinate grown in
// this step) exactly on zero and leave the rest to the inner optimizer.
ParamTree confine_updates(const ParamTree& updates, const ParamTree& params, const MaskTree& masks,
                          const std::map<std::string, std::vector<std::size_t>>* grown) {
  ParamTree out = updates;
  for (const auto& [path, mask] : masks) {
    Tensor& u = out.at(path);
    const Tensor& w = params.at(path);
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!mask.get(i)) u[i] = -w[i];
    }
    if (grown != nullptr) {
      if (auto it = grown->find(path); it != grown->end()) {
        for (std::size_t i : it->second) u[i] = -w[i];
      }
    }
  }
  return out;
}

}  // namespace

GradientTransformation Updater::wrap_optimizer(GradientTransformation inner) const {
  auto cfg = config_;
  auto self = *this;
  auto inner_tx = std::make_shared<const GradientTransformation>(std::move(inner));

  auto init = [cfg, self, inner_tx](const ParamTree& params) {
    auto ss = std::make_shared<SparsityState>();
    ss->targets = self.layer_targets(params);
    if (is_sparse_training(cfg->algorithm)) {
      ss->masks = static_init(*cfg, ss->targets, params);
    } else if (cfg->algorithm == AlgorithmKind::kSteMagnitude) {
      ss->masks = ste_masks(*cfg, ss->targets, params, 0);
    } else {
      for (const auto& [path, _] : ss->targets) {
        ss->masks.emplace(path, Mask::ones(params.at(path).shape(), cfg->mask_encoding()));
      }
    }
    OptState state;
    state.nested.push_back(inner_tx->init(params));
    state.extension = std::move(ss);
    return state;
  };

  auto update = [cfg, inner_tx](const ParamTree& grads, const OptState& state, const ParamTree& params) {
    if (state.nested.size() != 1) throw StructuralError("wrapped optimizer state must hold one inner state");
    const SparsityState& current = sparsity_state(state);
    const std::int64_t step = state.step;
    const AlgorithmKind kind = cfg->algorithm;

    std::shared_ptr<const StateExtension> next_ext = state.extension;
    const MaskTree* masks = &current.masks;
    std::optional<MaskChange> change;

    if (should_update(cfg->schedule, step)) {
      if (is_gradual_pruning(kind)) {
        auto ss = std::make_shared<SparsityState>(current);
        ss->masks = gradual_prune_update(*cfg, current, params, &grads, step);
        masks = &ss->masks;
        next_ext = std::move(ss);
      } else if (kind == AlgorithmKind::kSetSparse || kind == AlgorithmKind::kRigLSparse) {
        change = drop_grow_update(*cfg, current, params, &grads, step);
        auto ss = std::make_shared<SparsityState>(current);
        ss->masks = change->masks;
        masks = &ss->masks;
        next_ext = std::move(ss);
      }
    }

    UpdateResult inner_result = inner_tx->update(grads, state.nested.front(), params);

    OptState next;
    next.step = step + 1;
    next.slots = state.slots;
    next.nested.push_back(std::move(inner_result.state));

    ParamTree updates;
    if (kind == AlgorithmKind::kSteMagnitude) {
      updates = std::move(inner_result.updates);
      auto ss = std::make_shared<SparsityState>(current);
      ss->masks = ste_masks(*cfg, current.targets, apply_updates(params, updates), next.step);
      next_ext = std::move(ss);
    } else {
      updates = confine_updates(inner_result.updates, params, *masks, change ? &change->grown : nullptr);
    }
    next.extension = std::move(next_ext);
    return UpdateResult{std::move(updates), std::move(next)};
  };

  return GradientTransformation{init, update};
}

ParamTree Updater::pre_forward_update(const ParamTree& params, const OptState& state) const {
  if (config_->algorithm != AlgorithmKind::kSteMagnitude) return params;
  return apply_masks(params, sparsity_state(state).masks);
}

ParamTree Updater::post_gradient_update(const ParamTree& params, const OptState& state) const {
  if (config_->algorithm == AlgorithmKind::kSteMagnitude) return params;
  return apply_masks(params, sparsity_state(state).masks);
}

namespace {

Tensor instant_scores(const UpdaterConfig& cfg, const Tensor& tensor, const std::string& path) {
  switch (cfg.algorithm) {
    case AlgorithmKind::kSaliencyPrune:
    case AlgorithmKind::kRigLSparse:
      throw UnsupportedError(to_string(cfg.algorithm) + " needs gradients and cannot prune instantly");
    case AlgorithmKind::kRandomPrune:
    case AlgorithmKind::kStaticSparse:
      return Tensor(tensor.shape(),
                    uniform_samples(derive_key(derive_key(cfg.root_key(), "instant"), path), tensor.size()));
    default: {
      Tensor scores = tensor;
      for (double& v : scores.data()) v = std::abs(v);
      return scores;
    }
  }
}

}  // namespace

MaskTree Updater::instant_masks(const ParamTree& params) const {
  const UpdaterConfig& cfg = *config_;
  const SparsityMap targets = layer_targets(params);
  if (cfg.algorithm == AlgorithmKind::kGlobalMagnitudePrune) {
    std::vector<std::string> paths;
    for (const auto& [path, _] : targets) paths.push_back(path);
    return global_magnitude_masks(params, paths, cfg.distribution.target_sparsity, cfg.mask_encoding());
  }
  MaskTree out;
  for (const auto& [path, target] : targets) {
    const Tensor scores = instant_scores(cfg, params.at(path), path);
    out.emplace(path, Mask::from_tensor(structured_mask(scores, target, cfg.structure, path), cfg.mask_encoding()));
  }
  return out;
}

ParamTree Updater::instant_sparsify(const ParamTree& params) const { return apply_masks(params, instant_masks(params)); }

Tensor Updater::instant_sparsify(const Tensor& tensor) const {
  const UpdaterConfig& cfg = *config_;
  const Tensor scores = instant_scores(cfg, tensor, "<tensor>");
  return Mask::from_tensor(structured_mask(scores, cfg.distribution.target_sparsity, cfg.structure)).apply(tensor);
}

}  // namespace sparsekit
