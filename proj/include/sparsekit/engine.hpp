#pragma once

#include <memory>

#include "sparsekit/algorithms.hpp"
#include "sparsekit/optim.hpp"

namespace sparsekit {

/// Sparsity bookkeeping attached to a wrapped optimizer state. Throws
/// ArgumentError if `state` was not produced by Updater::wrap_optimizer.
const SparsityState& sparsity_state(const OptState& state);

/// Owns one algorithm configuration and turns it into optimizer wrapping,
/// forward/backward parameter hooks and one-shot pruning. Stateless: all
/// mutable data lives in the OptState returned by the wrapped optimizer.
///
/// A training loop uses it as
///
///   auto tx = updater.wrap_optimizer(adam(1e-3));
///   auto state = tx.init(params);
///   for (...) {
///     auto forward = updater.pre_forward_update(params, state);
///     auto grads = loss_and_grads(forward, batch);
///     auto [updates, next] = tx.update(grads, state, params);
///     params = updater.post_gradient_update(apply_updates(params, updates), next);
///     state = std::move(next);
///   }
class Updater {
 public:
  /// Throws ConfigError if the configuration is invalid.
  explicit Updater(UpdaterConfig config);

  [[nodiscard]] const UpdaterConfig& config() const noexcept { return *config_; }

  /// Wraps `inner`: init attaches masks (dense for gradual pruning, at the
  /// target for sparse training, top-k for STE), and update runs the mask
  /// hook when the schedule fires, delegates to `inner`, then confines the
  /// emitted updates to the mask (except for STE).
  [[nodiscard]] GradientTransformation wrap_optimizer(GradientTransformation inner) const;

  /// STE: params projected by the current mask. Everything else: identity.
  [[nodiscard]] ParamTree pre_forward_update(const ParamTree& params, const OptState& state) const;

  /// Params multiplied by the masks. Identity for STE, whose dense weights
  /// are never masked.
  [[nodiscard]] ParamTree post_gradient_update(const ParamTree& params, const OptState& state) const;

  /// One-shot pruning at the final target sparsity. Throws UnsupportedError
  /// for gradient-based criteria (saliency, RigL).
  [[nodiscard]] ParamTree instant_sparsify(const ParamTree& params) const;
  /// Single tensors skip the distribution and filter and use the target
  /// sparsity directly.
  [[nodiscard]] Tensor instant_sparsify(const Tensor& tensor) const;
  /// Masks instant_sparsify would apply.
  [[nodiscard]] MaskTree instant_masks(const ParamTree& params) const;

  /// Per-layer targets for the parameters this updater sparsifies.
  [[nodiscard]] SparsityMap layer_targets(const ParamTree& params) const;

 private:
  std::shared_ptr<const UpdaterConfig> config_;
};

}  // namespace sparsekit
