#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "sparsekit/algorithms.hpp"
#include "sparsekit/errors.hpp"

using namespace sparsekit;

namespace {

Mask bits(Shape shape, std::vector<std::uint8_t> b) { return Mask(std::move(shape), std::move(b)); }

UpdaterConfig prune_config(AlgorithmKind kind, double s) {
  UpdaterConfig cfg;
  cfg.algorithm = kind;
  cfg.distribution.target_sparsity = s;
  cfg.schedule.kind = ScheduleKind::kPolynomial;
  cfg.schedule.final_sparsity = s;
  cfg.schedule.end_step = 100;
  return cfg;
}

}  // namespace

TEST(Parse, AliasesAndCanonicalNames) {
  EXPECT_EQ(parse_algorithm("mag"), AlgorithmKind::kMagnitudePrune);
  EXPECT_EQ(parse_algorithm("mag-g"), AlgorithmKind::kGlobalMagnitudePrune);
  EXPECT_EQ(parse_algorithm("rigl_sparse"), AlgorithmKind::kRigLSparse);
  for (auto k : {AlgorithmKind::kRandomPrune, AlgorithmKind::kSaliencyPrune, AlgorithmKind::kSteMagnitude,
                 AlgorithmKind::kStaticSparse, AlgorithmKind::kSetSparse}) {
    EXPECT_EQ(parse_algorithm(to_string(k)), k);
  }
  EXPECT_THROW(parse_algorithm("lottery"), ConfigError);
  EXPECT_TRUE(requires_gradients(AlgorithmKind::kSteMagnitude));
  EXPECT_FALSE(requires_gradients(AlgorithmKind::kSetSparse));
}

TEST(Score, Magnitude) {
  ParamTree p{{"w", Tensor::vector({-3, 0.5})}};
  EXPECT_EQ(score(AlgorithmKind::kMagnitudePrune, p, nullptr, std::nullopt).at("w"), Tensor::vector({3, 0.5}));
}

TEST(Score, SaliencyKeepsLargestProduct) {
  ParamTree p{{"w", Tensor::vector({2, -1})}};
  ParamTree g{{"w", Tensor::vector({0.1, 0.5})}};
  const Tensor s = score(AlgorithmKind::kSaliencyPrune, p, &g, std::nullopt).at("w");
  EXPECT_DOUBLE_EQ(s[0], 0.2);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
  EXPECT_EQ(structured_mask(s, 0.5, StructureSpec::unstructured()), Tensor::vector({0, 1}));
}

TEST(Score, MissingInputs) {
  ParamTree p{{"w", Tensor::vector({1, 2})}};
  EXPECT_THROW(score(AlgorithmKind::kSaliencyPrune, p, nullptr, std::nullopt), ArgumentError);
  EXPECT_THROW(score(AlgorithmKind::kRandomPrune, p, nullptr, std::nullopt), ArgumentError);
  EXPECT_THROW(score(AlgorithmKind::kRigLSparse, p, &p, RngKey{}), ArgumentError);
}

TEST(Score, RandomIsReproducibleAndPathKeyed) {
  ParamTree p{{"a", Tensor({16})}, {"b", Tensor({16})}};
  const RngKey key{8, 0};
  const ParamTree s1 = score(AlgorithmKind::kRandomPrune, p, nullptr, key);
  EXPECT_EQ(s1, score(AlgorithmKind::kRandomPrune, p, nullptr, key));
  EXPECT_NE(s1.at("a"), s1.at("b"));
}

TEST(GlobalMagnitude, Example) {
  ParamTree p{{"A", Tensor::vector({3, 4})}, {"B", Tensor::vector({1, 0})}};
  const MaskTree m = global_magnitude_masks(p, {"A", "B"}, 0.5);
  EXPECT_EQ(m.at("A").to_bytes(), (std::vector<std::uint8_t>{0, 1}));
  EXPECT_EQ(m.at("B").to_bytes(), (std::vector<std::uint8_t>{1, 0}));
}

TEST(GlobalMagnitude, ScaleInvariant) {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> n(0, 1);
  ParamTree p{{"A", Tensor({8, 8})}, {"B", Tensor({8, 4})}, {"C", Tensor({4, 3})}};
  for (auto& [_, t] : p) {
    for (double& v : t.data()) v = n(gen);
  }
  const MaskTree base = global_magnitude_masks(p, {"A", "B", "C"}, 0.7);
  for (const std::string layer : {"A", "B", "C"}) {
    ParamTree scaled = p;
    for (double& v : scaled.at(layer).data()) v *= 10.0;
    EXPECT_EQ(global_magnitude_masks(scaled, {"A", "B", "C"}, 0.7), base) << layer;
  }
}

TEST(GlobalMagnitude, SingleLayerMatchesPerLayer) {
  ParamTree p{{"A", Tensor::vector({0.3, -1.2, 0.7, 0.05, 2.0})}};
  const MaskTree g = global_magnitude_masks(p, {"A"}, 0.6);
  Tensor s = p.at("A");
  for (double& v : s.data()) v = std::abs(v);
  EXPECT_EQ(g.at("A").to_tensor(), structured_mask(s, 0.6, StructureSpec::unstructured()));
}

TEST(GlobalMagnitude, ZeroNormLayerLosesEverything) {
  ParamTree p{{"A", Tensor::vector({1, 2, 3})}, {"Z", Tensor({3})}};
  const MaskTree m = global_magnitude_masks(p, {"A", "Z"}, 0.5);
  EXPECT_EQ(m.at("Z").count_nonzero(), 0U);
  EXPECT_EQ(m.at("A").count_nonzero(), 3U);
}

TEST(GradualPrune, TwoStageNesting) {
  UpdaterConfig cfg = prune_config(AlgorithmKind::kMagnitudePrune, 0.75);
  cfg.schedule.kind = ScheduleKind::kPeriodic;
  ParamTree p{{"w", Tensor({1, 4}, {4, 3, 2, 1})}};
  // Periodic schedules report the layer target once active, so each stage sets its own.
  SparsityState state;
  state.targets = {{"w", 0.5}};
  cfg.distribution.target_sparsity = 0.5;
  cfg.schedule.final_sparsity = 0.5;
  EXPECT_EQ(gradual_prune_update(cfg, state, p, nullptr, 0).at("w").to_bytes(),
            (std::vector<std::uint8_t>{1, 1, 0, 0}));
  state.targets = {{"w", 0.75}};
  cfg.distribution.target_sparsity = 0.75;
  cfg.schedule.final_sparsity = 0.75;
  EXPECT_EQ(gradual_prune_update(cfg, state, p, nullptr, 10).at("w").to_bytes(),
            (std::vector<std::uint8_t>{1, 0, 0, 0}));
}

TEST(GradualPrune, RandomReplay) {
  UpdaterConfig cfg = prune_config(AlgorithmKind::kRandomPrune, 0.5);
  cfg.rng_seed = 99;
  SparsityState state;
  state.targets = {{"w", 0.5}};
  ParamTree p{{"w", Tensor({8, 8})}};
  EXPECT_EQ(gradual_prune_update(cfg, state, p, nullptr, 40), gradual_prune_update(cfg, state, p, nullptr, 40));
  EXPECT_NE(gradual_prune_update(cfg, state, p, nullptr, 40), gradual_prune_update(cfg, state, p, nullptr, 50));
}

TEST(Ste, ProjectionExample) {
  UpdaterConfig cfg = prune_config(AlgorithmKind::kSteMagnitude, 0.5);
  cfg.schedule.kind = ScheduleKind::kNoUpdate;
  SparsityState state;
  state.targets = {{"w", 0.5}};
  ParamTree p{{"w", Tensor({1, 4}, {0.3, 1.2, 0.7, 0.05})}};
  EXPECT_EQ(ste_forward_projection(cfg, state, p, 0).at("w"), Tensor({1, 4}, {0, 1.2, 0.7, 0}));
  EXPECT_EQ(p.at("w"), Tensor({1, 4}, {0.3, 1.2, 0.7, 0.05}));
}

TEST(Ste, ZeroSparsityIsIdentity) {
  UpdaterConfig cfg = prune_config(AlgorithmKind::kSteMagnitude, 0.5);
  SparsityState state;
  state.targets = {{"w", 0.5}};
  ParamTree p{{"w", Tensor({1, 4}, {0.3, 1.2, 0.7, 0.05})}};
  // Polynomial ramp starts at 0.
  EXPECT_EQ(ste_forward_projection(cfg, state, p, 0), p);
}

TEST(DropFraction, CosineDecay) {
  const DropGrowConfig cfg;
  EXPECT_NEAR(drop_fraction(cfg, 0, 100), 0.1, 1e-15);
  EXPECT_NEAR(drop_fraction(cfg, 50, 100), 0.05, 1e-15);
  EXPECT_NEAR(drop_fraction(cfg, 100, 100), 0.0, 1e-15);
  EXPECT_NEAR(drop_fraction(cfg, 400, 100), 0.0, 1e-15);
  EXPECT_THROW(drop_fraction(cfg, 0, 0), ConfigError);
}

TEST(DropGrow, RigLExample) {
  MaskTree masks;
  masks.emplace("w", bits({4}, {1, 1, 0, 0}));
  ParamTree w{{"w", Tensor::vector({0.9, 0.1, 0, 0})}};
  ParamTree g{{"w", Tensor::vector({0.0, 0.0, 5, 1})}};
  const MaskChange c = drop_grow_with_fraction(AlgorithmKind::kRigLSparse, masks, w, &g, 0.5, RngKey{});
  EXPECT_EQ(c.masks.at("w").to_bytes(), (std::vector<std::uint8_t>{1, 0, 1, 0}));
  EXPECT_EQ(c.dropped.at("w"), (std::vector<std::size_t>{1}));
  EXPECT_EQ(c.grown.at("w"), (std::vector<std::size_t>{2}));
}

TEST(DropGrow, ZeroFractionKeepsMask) {
  MaskTree masks;
  masks.emplace("w", bits({4}, {1, 0, 1, 0}));
  ParamTree w{{"w", Tensor::vector({1, 0, 2, 0})}};
  const MaskChange c = drop_grow_with_fraction(AlgorithmKind::kSetSparse, masks, w, nullptr, 0.0, RngKey{});
  EXPECT_EQ(c.masks, masks);
}

TEST(DropGrow, SetReplayAndConservation) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> n(0, 1);
  UpdaterConfig cfg = prune_config(AlgorithmKind::kSetSparse, 0.8);
  cfg.schedule.kind = ScheduleKind::kPeriodic;
  ParamTree p{{"w", Tensor({10, 10})}};
  for (double& v : p.at("w").data()) v = n(gen);
  SparsityState state;
  state.targets = {{"w", 0.8}};
  state.masks = static_init(cfg, state.targets, p);
  const MaskChange a = drop_grow_update(cfg, state, p, nullptr, 3);
  EXPECT_EQ(a.masks, drop_grow_update(cfg, state, p, nullptr, 3).masks);
  EXPECT_EQ(a.masks.at("w").count_nonzero(), 20U);
  const std::set<std::size_t> grown(a.grown.at("w").begin(), a.grown.at("w").end());
  for (std::size_t i : a.dropped.at("w")) {
    EXPECT_TRUE(state.masks.at("w").get(i));
    EXPECT_FALSE(grown.contains(i));
  }
  for (std::size_t i : grown) EXPECT_FALSE(state.masks.at("w").get(i));
}

TEST(DropGrow, ClampsToInactiveCount) {
  MaskTree masks;
  masks.emplace("w", bits({4}, {1, 1, 1, 0}));
  ParamTree w{{"w", Tensor::vector({1, 2, 3, 0})}};
  const MaskChange c = drop_grow_with_fraction(AlgorithmKind::kSetSparse, masks, w, nullptr, 0.9, RngKey{1, 0});
  EXPECT_EQ(c.dropped.at("w").size(), 1U);
  EXPECT_EQ(c.grown.at("w"), (std::vector<std::size_t>{3}));
  EXPECT_EQ(c.masks.at("w").count_nonzero(), 3U);
}

TEST(StaticInit, ExactCountAndSeedDependence) {
  UpdaterConfig cfg = prune_config(AlgorithmKind::kStaticSparse, 0.8);
  cfg.schedule.kind = ScheduleKind::kNoUpdate;
  ParamTree p{{"w", Tensor({1, 10})}};
  const SparsityMap targets{{"w", 0.8}};
  std::set<std::vector<std::uint8_t>> distinct;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.rng_seed = seed;
    const MaskTree m = static_init(cfg, targets, p);
    EXPECT_EQ(m.at("w").count_nonzero(), 2U);
    distinct.insert(m.at("w").to_bytes());
  }
  EXPECT_GT(distinct.size(), 1U);
}

TEST(UpdaterConfig, ValidationRules) {
  UpdaterConfig cfg = prune_config(AlgorithmKind::kMagnitudePrune, 0.5);
  EXPECT_NO_THROW(cfg.validate());

  UpdaterConfig mismatch = cfg;
  mismatch.schedule.final_sparsity = 0.6;
  EXPECT_THROW(mismatch.validate(), ConfigError);

  UpdaterConfig nm = cfg;
  nm.structure = StructureSpec::n_by_m(2, 4);
  EXPECT_NO_THROW(nm.validate());
  nm.structure = StructureSpec::n_by_m(1, 4);
  EXPECT_THROW(nm.validate(), ConfigError);

  UpdaterConfig global = prune_config(AlgorithmKind::kGlobalMagnitudePrune, 0.5);
  global.structure = StructureSpec::block(2, 2);
  EXPECT_THROW(global.validate(), ConfigError);

  UpdaterConfig rigl = prune_config(AlgorithmKind::kRigLSparse, 0.5);
  rigl.structure = StructureSpec::n_by_m(2, 4);
  EXPECT_THROW(rigl.validate(), ConfigError);
  rigl.structure = StructureSpec::unstructured();
  rigl.schedule.end_step = 0;
  EXPECT_THROW(rigl.validate(), ConfigError);

  UpdaterConfig drop = cfg;
  drop.drop_grow.initial_drop_fraction = 1.0;
  EXPECT_THROW(drop.validate(), ConfigError);
}
