#include <gtest/gtest.h>

#include <random>

#include "sparsekit/engine.hpp"
#include "sparsekit/errors.hpp"

using namespace sparsekit;

namespace {

UpdaterConfig config(AlgorithmKind kind, double s, ScheduleKind schedule, std::int64_t end = 0) {
  UpdaterConfig cfg;
  cfg.algorithm = kind;
  cfg.distribution.target_sparsity = s;
  cfg.schedule.kind = schedule;
  cfg.schedule.final_sparsity = s;
  cfg.schedule.end_step = end;
  return cfg;
}

ParamTree random_params(std::uint64_t seed) {
  RngStream rng(RngKey{seed, 0});
  ParamTree p{{"l0/kernel", Tensor({6, 8})}, {"l0/bias", Tensor({8})}, {"l1/kernel", Tensor({8, 4})}};
  for (auto& [_, t] : p) {
    for (double& v : t.data()) v = rng.normal();
  }
  return p;
}

ParamTree random_grads(RngStream& rng, const ParamTree& like) {
  ParamTree g = zeros_like(like);
  for (auto& [_, t] : g) {
    for (double& v : t.data()) v = rng.normal();
  }
  return g;
}

struct Trace {
  std::vector<ParamTree> params;
  std::vector<OptState> states;
};

// Four-line loop with synthetic gradients.
Trace run(const Updater* updater, GradientTransformation inner, int steps, std::uint64_t seed) {
  GradientTransformation tx = updater ? updater->wrap_optimizer(std::move(inner)) : std::move(inner);
  ParamTree params = random_params(seed);
  OptState state = tx.init(params);
  if (updater) params = updater->post_gradient_update(params, state);
  RngStream rng(RngKey{seed, 1});
  Trace out;
  for (int t = 0; t < steps; ++t) {
    const ParamTree forward = updater ? updater->pre_forward_update(params, state) : params;
    ParamTree grads = random_grads(rng, forward);
    auto r = tx.update(grads, state, params);
    params = apply_updates(params, r.updates);
    state = std::move(r.state);
    if (updater) params = updater->post_gradient_update(params, state);
    out.params.push_back(params);
    out.states.push_back(state);
  }
  return out;
}

}  // namespace

TEST(Wrapper, NoOpMatchesInner) {
  const Updater updater(config(AlgorithmKind::kMagnitudePrune, 0.0, ScheduleKind::kNoUpdate));
  EXPECT_EQ(run(&updater, sgd(0.1), 100, 1).params, run(nullptr, sgd(0.1), 100, 1).params);
  EXPECT_EQ(run(&updater, adam(0.01), 100, 2).params, run(nullptr, adam(0.01), 100, 2).params);
}

TEST(Wrapper, OneShotMagnitude) {
  UpdaterConfig cfg = config(AlgorithmKind::kMagnitudePrune, 0.5, ScheduleKind::kOneShot);
  const Updater updater(cfg);
  auto tx = updater.wrap_optimizer(sgd(0.01));
  ParamTree p{{"w", Tensor({2, 2}, {0.4, -2, 1, 0.1})}};
  OptState s = tx.init(p);
  auto r = tx.update(zeros_like(p), s, p);
  p = updater.post_gradient_update(apply_updates(p, r.updates), r.state);
  EXPECT_EQ(p.at("w"), Tensor({2, 2}, {0, -2, 1, 0}));
  EXPECT_EQ(r.state.step, 1);
}

TEST(Wrapper, PackedMasksBehaveLikeBytes) {
  UpdaterConfig cfg = config(AlgorithmKind::kMagnitudePrune, 0.7, ScheduleKind::kPolynomial, 40);
  cfg.schedule.frequency = 5;
  const Updater bytes(cfg);
  cfg.use_packed_masks = true;
  const Updater packed(cfg);
  const Trace a = run(&bytes, adam(0.01), 50, 5);
  const Trace b = run(&packed, adam(0.01), 50, 5);
  EXPECT_EQ(a.params, b.params);
  const auto& masks = sparsity_state(b.states.back()).masks;
  for (const auto& [_, m] : masks) EXPECT_EQ(m.encoding(), MaskEncoding::kPacked);
}

TEST(Wrapper, StepCounterAdvancesByOne) {
  const Updater updater(config(AlgorithmKind::kSetSparse, 0.8, ScheduleKind::kPeriodic, 30));
  const Trace r = run(&updater, sgd(0.05), 10, 3);
  for (std::size_t i = 0; i < r.states.size(); ++i) {
    EXPECT_EQ(r.states[i].step, static_cast<std::int64_t>(i + 1));
    EXPECT_EQ(r.states[i].nested.front().step, static_cast<std::int64_t>(i + 1));
  }
}

TEST(Wrapper, ConfigErrorsSurfaceAtConstruction) {
  UpdaterConfig cfg = config(AlgorithmKind::kMagnitudePrune, 0.8, ScheduleKind::kOneShot);
  cfg.structure = StructureSpec::n_by_m(2, 4);
  EXPECT_THROW(Updater{cfg}, ConfigError);
}

TEST(Wrapper, GradualMasksAreNestedAndWeightsStayZero) {
  UpdaterConfig cfg = config(AlgorithmKind::kMagnitudePrune, 0.9, ScheduleKind::kPolynomial, 90);
  cfg.schedule.frequency = 10;
  const Updater updater(cfg);
  const Trace r = run(&updater, adam(0.05), 120, 7);
  for (std::size_t t = 1; t < r.params.size(); ++t) {
    for (const auto& [path, tensor] : r.params[t - 1]) {
      if (path.ends_with("bias")) continue;
      for (std::size_t i = 0; i < tensor.size(); ++i) {
        if (tensor[i] == 0.0) ASSERT_EQ(r.params[t].at(path)[i], 0.0) << path << " step " << t;
      }
    }
  }
  const SparsitySummary s = sparsity_summary(sparsity_state(r.states.back()).masks);
  EXPECT_EQ(s.per_path.at("l0/kernel").nonzeros, 48U - zero_count(0.9, 48));
}

TEST(Wrapper, SparseTrainingConservesCounts) {
  for (auto kind : {AlgorithmKind::kStaticSparse, AlgorithmKind::kSetSparse, AlgorithmKind::kRigLSparse}) {
    const Updater updater(config(kind, 0.75, kind == AlgorithmKind::kStaticSparse ? ScheduleKind::kNoUpdate
                                                                                  : ScheduleKind::kPeriodic,
                                 40));
    const Trace r = run(&updater, sgd(0.05), 50, 9);
    for (const auto& st : r.states) {
      const auto& masks = sparsity_state(st).masks;
      EXPECT_EQ(masks.at("l0/kernel").count_nonzero(), 12U);
      EXPECT_EQ(masks.at("l1/kernel").count_nonzero(), 8U);
    }
    if (kind == AlgorithmKind::kStaticSparse) {
      EXPECT_EQ(sparsity_state(r.states.front()).masks, sparsity_state(r.states.back()).masks);
    }
  }
}

TEST(Wrapper, GrownWeightsStartAtZero) {
  UpdaterConfig cfg = config(AlgorithmKind::kRigLSparse, 0.75, ScheduleKind::kPeriodic, 40);
  const Updater updater(cfg);
  auto tx = updater.wrap_optimizer(sgd(0.1));
  ParamTree p = random_params(4);
  OptState s = tx.init(p);
  p = updater.post_gradient_update(p, s);
  RngStream rng(RngKey{4, 2});
  auto r = tx.update(random_grads(rng, p), s, p);
  const ParamTree next = updater.post_gradient_update(apply_updates(p, r.updates), r.state);
  const auto& before = sparsity_state(s).masks;
  const auto& after = sparsity_state(r.state).masks;
  std::size_t grown = 0;
  for (const auto& [path, m] : after) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m.get(i) && !before.at(path).get(i)) {
        ++grown;
        EXPECT_EQ(next.at(path)[i], 0.0);
      }
    }
  }
  EXPECT_GT(grown, 0U);
}

TEST(Ste, ForwardProjectionOnlyTouchesForwardView) {
  UpdaterConfig cfg = config(AlgorithmKind::kSteMagnitude, 0.5, ScheduleKind::kNoUpdate);
  const Updater updater(cfg);
  auto tx = updater.wrap_optimizer(sgd(0.1));
  ParamTree p{{"w", Tensor({1, 2}, {3, 5})}};
  OptState s = tx.init(p);
  EXPECT_EQ(updater.pre_forward_update(p, s).at("w"), Tensor({1, 2}, {0, 5}));
  EXPECT_EQ(updater.post_gradient_update(p, s), p);
  EXPECT_EQ(p.at("w"), Tensor({1, 2}, {3, 5}));
}

TEST(Ste, MaskedWeightCanReenter) {
  UpdaterConfig cfg = config(AlgorithmKind::kSteMagnitude, 0.5, ScheduleKind::kNoUpdate);
  const Updater updater(cfg);
  auto tx = updater.wrap_optimizer(sgd(1.0));
  ParamTree p{{"w", Tensor({1, 2}, {3, 5})}};
  OptState s = tx.init(p);
  // Push the masked coordinate up and the kept one down.
  ParamTree g{{"w", Tensor({1, 2}, {-4, 3})}};
  auto r = tx.update(g, s, p);
  p = updater.post_gradient_update(apply_updates(p, r.updates), r.state);
  EXPECT_EQ(p.at("w"), Tensor({1, 2}, {7, 2}));
  EXPECT_EQ(updater.pre_forward_update(p, r.state).at("w"), Tensor({1, 2}, {7, 0}));
}

TEST(PostGradient, MaskingRules) {
  const Updater updater(config(AlgorithmKind::kMagnitudePrune, 0.5, ScheduleKind::kOneShot));
  auto tx = updater.wrap_optimizer(sgd(0.1));
  ParamTree p{{"w", Tensor({1, 3}, {1, 2, 3})}};
  OptState s = tx.init(p);
  EXPECT_EQ(updater.post_gradient_update(p, s), p);
  auto ss = std::make_shared<SparsityState>(sparsity_state(s));
  ss->masks.at("w") = Mask::from_tensor(Tensor({1, 3}, {1, 0, 1}));
  s.extension = ss;
  const ParamTree once = updater.post_gradient_update(p, s);
  EXPECT_EQ(once.at("w"), Tensor({1, 3}, {1, 0, 3}));
  EXPECT_EQ(updater.post_gradient_update(once, s), once);
  EXPECT_EQ(updater.pre_forward_update(p, s), p);
}

TEST(InstantSparsify, SingleTensor) {
  const Updater updater(config(AlgorithmKind::kMagnitudePrune, 0.5, ScheduleKind::kOneShot));
  EXPECT_EQ(updater.instant_sparsify(Tensor::vector({0.3, 1.2, 0.7, 0.05})), Tensor::vector({0, 1.2, 0.7, 0}));
  const Updater none(config(AlgorithmKind::kMagnitudePrune, 0.0, ScheduleKind::kOneShot));
  EXPECT_EQ(none.instant_sparsify(Tensor::vector({0.3, 1.2})), Tensor::vector({0.3, 1.2}));
}

TEST(InstantSparsify, TreeKeepsBiasDense) {
  const Updater updater(config(AlgorithmKind::kMagnitudePrune, 0.75, ScheduleKind::kOneShot));
  const ParamTree p = random_params(3);
  const ParamTree out = updater.instant_sparsify(p);
  EXPECT_EQ(out.at("l0/bias"), p.at("l0/bias"));
  EXPECT_EQ(sparsity_summary(updater.instant_masks(p)).per_path.at("l1/kernel").nonzeros, 8U);
}

TEST(InstantSparsify, GradientCriteriaUnsupported) {
  EXPECT_THROW(Updater(config(AlgorithmKind::kSaliencyPrune, 0.5, ScheduleKind::kOneShot)).instant_sparsify(random_params(1)),
               UnsupportedError);
  EXPECT_THROW(
      Updater(config(AlgorithmKind::kRigLSparse, 0.5, ScheduleKind::kNoUpdate)).instant_sparsify(Tensor::vector({1, 2})),
      UnsupportedError);
}

TEST(SparsityState, RequiresWrappedState) { EXPECT_THROW(sparsity_state(OptState{}), ArgumentError); }
