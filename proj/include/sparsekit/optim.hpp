#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sparsekit/tensor.hpp"

namespace sparsekit {

/// Opaque payload a wrapping transformation can attach to its state
/// (the sparsity wrapper stores masks here).
class StateExtension {
 public:
  virtual ~StateExtension() = default;
  [[nodiscard]] virtual bool equals(const StateExtension& other) const = 0;
};

/// Optimizer state. Treated as an immutable value: update functions return a
/// new state and the extension is shared, never mutated in place.
struct OptState {
  std::int64_t step = 0;
  std::map<std::string, ParamTree> slots;
  std::vector<OptState> nested;
  std::shared_ptr<const StateExtension> extension;

  friend bool operator==(const OptState& a, const OptState& b);
};

struct UpdateResult {
  ParamTree updates;
  OptState state;
};

/// An (init, update) pair. Updates are additive; apply them with
/// apply_updates.
struct GradientTransformation {
  std::function<OptState(const ParamTree& params)> init;
  std::function<UpdateResult(const ParamTree& grads, const OptState& state, const ParamTree& params)> update;
};

/// updates = -learning_rate * grads
GradientTransformation sgd(double learning_rate);

/// Bias-corrected Adam with slots "adam_m" and "adam_v".
GradientTransformation adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                            double epsilon = 1e-8);

/// updates = factor * grads
GradientTransformation scale(double factor);

/// Passes gradients through unchanged.
GradientTransformation identity();

/// Pipes updates through each transform in order; child states are kept in
/// `nested` in the same order.
GradientTransformation chain(std::vector<GradientTransformation> transforms);

ParamTree apply_updates(const ParamTree& params, const ParamTree& updates);

}  // namespace sparsekit
