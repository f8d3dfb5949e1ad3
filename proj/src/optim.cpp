#include "sparsekit/optim.hpp"

#include <cmath>
#include <string>

namespace sparsekit {

bool operator==(const OptState& a, const OptState& b) {
  if (a.step != b.step || a.slots != b.slots || a.nested != b.nested) return false;
  if (!a.extension || !b.extension) return !a.extension && !b.extension;
  return a.extension->equals(*b.extension);
}

namespace {

OptState counter_only_init(const ParamTree&) { return OptState{}; }

OptState advanced(const OptState& state) {
  OptState next = state;
  next.step += 1;
  return next;
}

}  // namespace

GradientTransformation sgd(double learning_rate) {
  if (!(learning_rate > 0.0)) {
    throw ArgumentError("sgd learning rate must be positive, got " + std::to_string(learning_rate));
  }
  return GradientTransformation{
      counter_only_init,
      [learning_rate](const ParamTree& grads, const OptState& state, const ParamTree&) {
        ParamTree updates = tree_map([learning_rate](double g) { return -learning_rate * g; }, grads);
        return UpdateResult{std::move(updates), advanced(state)};
      }};
}

GradientTransformation adam(double learning_rate, double beta1, double beta2, double epsilon) {
  if (!(learning_rate > 0.0)) throw ArgumentError("adam learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ArgumentError("adam beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ArgumentError("adam beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ArgumentError("adam epsilon must be positive");

  auto init = [](const ParamTree& params) {
    OptState state;
    state.slots["adam_m"] = zeros_like(params);
    state.slots["adam_v"] = zeros_like(params);
    return state;
  };
  auto update = [=](const ParamTree& grads, const OptState& state, const ParamTree&) {
    const ParamTree& m = state.slots.at("adam_m");
    const ParamTree& v = state.slots.at("adam_v");
    ParamTree m_next = tree_map([=](double mi, double g) { return beta1 * mi + (1.0 - beta1) * g; }, m, grads);
    ParamTree v_next = tree_map([=](double vi, double g) { return beta2 * vi + (1.0 - beta2) * g * g; }, v, grads);
    const auto t = static_cast<double>(state.step + 1);
    const double m_corr = 1.0 - std::pow(beta1, t);
    const double v_corr = 1.0 - std::pow(beta2, t);
    ParamTree updates = tree_map(
        [=](double mi, double vi) { return -learning_rate * (mi / m_corr) / (std::sqrt(vi / v_corr) + epsilon); },
        m_next, v_next);
    OptState next = advanced(state);
    next.slots["adam_m"] = std::move(m_next);
    next.slots["adam_v"] = std::move(v_next);
    return UpdateResult{std::move(updates), std::move(next)};
  };
  return GradientTransformation{init, update};
}

GradientTransformation scale(double factor) {
  return GradientTransformation{
      counter_only_init,
      [factor](const ParamTree& grads, const OptState& state, const ParamTree&) {
        return UpdateResult{tree_map([factor](double g) { return factor * g; }, grads), advanced(state)};
      }};
}

GradientTransformation identity() {
  return GradientTransformation{
      counter_only_init,
      [](const ParamTree& grads, const OptState& state, const ParamTree&) {
        return UpdateResult{grads, advanced(state)};
      }};
}

GradientTransformation chain(std::vector<GradientTransformation> transforms) {
  if (transforms.empty()) throw ArgumentError("chain requires at least one transformation");
  auto shared = std::make_shared<const std::vector<GradientTransformation>>(std::move(transforms));
  auto init = [shared](const ParamTree& params) {
    OptState state;
    for (const auto& tx : *shared) state.nested.push_back(tx.init(params));
    return state;
  };
  auto update = [shared](const ParamTree& grads, const OptState& state, const ParamTree& params) {
    if (state.nested.size() != shared->size()) {
      throw StructuralError("chain state holds " + std::to_string(state.nested.size()) +
                            " child states for " + std::to_string(shared->size()) + " transformations");
    }
    OptState next = advanced(state);
    ParamTree current = grads;
    for (std::size_t i = 0; i < shared->size(); ++i) {
      UpdateResult r = (*shared)[i].update(current, state.nested[i], params);
      current = std::move(r.updates);
      next.nested[i] = std::move(r.state);
    }
    return UpdateResult{std::move(current), std::move(next)};
  };
  return GradientTransformation{init, update};
}

ParamTree apply_updates(const ParamTree& params, const ParamTree& updates) {
  return tree_map([](double p, double u) { return p + u; }, params, updates);
}

}  // namespace sparsekit
