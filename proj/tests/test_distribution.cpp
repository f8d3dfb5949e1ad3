#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "sparsekit/distribution.hpp"
#include "sparsekit/errors.hpp"
#include "sparsekit/structure.hpp"

using namespace sparsekit;

namespace {

DistributionSpec spec_of(DistributionKind kind, double s) {
  DistributionSpec d;
  d.kind = kind;
  d.target_sparsity = s;
  return d;
}

// Continuous ERK densities by bisection on epsilon: sum_l min(1, eps*r_l)*n_l = (1-s)*N.
std::vector<double> erk_oracle(const std::vector<Shape>& shapes, double s) {
  std::vector<double> r, n;
  double total = 0;
  for (const auto& sh : shapes) {
    const double count = static_cast<double>(num_elements(sh));
    r.push_back(std::accumulate(sh.begin(), sh.end(), 0.0) / count);
    n.push_back(count);
    total += count;
  }
  auto kept = [&](double eps) {
    double k = 0;
    for (std::size_t i = 0; i < r.size(); ++i) k += std::min(1.0, eps * r[i]) * n[i];
    return k;
  };
  double lo = 0, hi = 1;
  while (kept(hi) < (1 - s) * total) hi *= 2;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kept(mid) < (1 - s) * total ? lo : hi) = mid;
  }
  std::vector<double> density;
  for (double ri : r) density.push_back(std::min(1.0, hi * ri));
  return density;
}

ParamTree tree_of(const std::vector<Shape>& shapes) {
  ParamTree t;
  for (std::size_t i = 0; i < shapes.size(); ++i) t.set("l" + std::to_string(i) + "/kernel", Tensor(shapes[i]));
  return t;
}

}  // namespace

TEST(DefaultFilter, RankOneStaysDense) {
  EXPECT_FALSE(default_filter("b", {64}));
  EXPECT_TRUE(default_filter("w", {64, 64}));
  EXPECT_TRUE(default_filter("c", {3, 3, 8, 16}));
}

TEST(DefaultFilter, ExcludeComposesByConjunction) {
  DistributionSpec d = spec_of(DistributionKind::kUniform, 0.5);
  d.exclude = {"embed/*"};
  EXPECT_FALSE(d.sparsifies("embed/kernel", {8, 8}));
  EXPECT_TRUE(d.sparsifies("dense/kernel", {8, 8}));
  d.user_filter = [](const std::string& p, const Shape&) { return p != "dense/kernel"; };
  EXPECT_FALSE(d.sparsifies("dense/kernel", {8, 8}));
  EXPECT_FALSE(d.sparsifies("other/bias", {8}));
}

TEST(Uniform, EveryFilteredInLayer) {
  ParamTree t{{"a", Tensor({4, 4})}, {"b", Tensor({2, 8})}, {"c", Tensor({4})}};
  auto m = compute_distribution(spec_of(DistributionKind::kUniform, 0.8), t);
  EXPECT_EQ(m.at("a"), 0.8);
  EXPECT_EQ(m.at("b"), 0.8);
  EXPECT_EQ(m.at("c"), 0.0);
}

TEST(Custom, ValuesAndMissingPath) {
  ParamTree t{{"a", Tensor({4, 4})}, {"b", Tensor({2, 8})}, {"bias", Tensor({4})}};
  DistributionSpec d = spec_of(DistributionKind::kCustomMap, 0.5);
  d.custom = {{"a", 0.3}, {"b", 0.9}};
  auto m = compute_distribution(d, t);
  EXPECT_EQ(m.at("a"), 0.3);
  EXPECT_EQ(m.at("b"), 0.9);
  EXPECT_EQ(m.at("bias"), 0.0);
  d.custom.erase("b");
  EXPECT_THROW(compute_distribution(d, t), ConfigError);
  d.custom = {{"a", 1.0}, {"b", 0.1}};
  EXPECT_THROW(compute_distribution(d, t), ConfigError);
}

TEST(Erk, SingleLayerIsExact) {
  for (double s : {0.0, 0.3, 0.8, 0.95}) {
    auto m = compute_distribution(spec_of(DistributionKind::kErk, s), tree_of({{7, 13}}));
    EXPECT_EQ(m.at("l0/kernel"), s);
  }
}

TEST(Erk, TwoLayerExample) {
  // (4,8): ratio 12/32; (8,2): ratio 10/16. 48 weights, 0.8 target -> 38.4 -> 38 zeros.
  const std::vector<Shape> shapes{{4, 8}, {8, 2}};
  auto m = compute_distribution(spec_of(DistributionKind::kErk, 0.8), tree_of(shapes));
  const double sa = m.at("l0/kernel"), sb = m.at("l1/kernel");
  EXPECT_LT(sb, sa);
  EXPECT_EQ(zero_count(sa, 32) + zero_count(sb, 16), 38U);
  const auto density = erk_oracle(shapes, 0.8);
  EXPECT_NEAR(sa, 1 - density[0], 1.0 / 32);
  EXPECT_NEAR(sb, 1 - density[1], 1.0 / 16);
  // Frozen from the oracle: epsilon = 9.6 / 22.
  EXPECT_NEAR(1 - density[0], 1 - 0.375 * 9.6 / 22, 1e-12);
  EXPECT_NEAR(1 - density[1], 1 - 0.625 * 9.6 / 22, 1e-12);
}

TEST(Erk, CapsDenseSmallLayers) {
  // The (2,2) layer has ratio 1 and is forced dense at a low target.
  const std::vector<Shape> shapes{{2, 2}, {64, 64}};
  auto m = compute_distribution(spec_of(DistributionKind::kErk, 0.5), tree_of(shapes));
  EXPECT_EQ(m.at("l0/kernel"), 0.0);
  EXPECT_EQ(zero_count(m.at("l1/kernel"), 4096), zero_count(0.5, 4100));
}

TEST(Erk, RandomCollectionsMatchOracle) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Shape> shapes;
    const int layers = 2 + static_cast<int>(gen() % 5);
    for (int l = 0; l < layers; ++l) {
      Shape sh{4 + gen() % 60, 2 + gen() % 60};
      if (gen() % 4 == 0) sh = {3, 3, 1 + gen() % 8, 4 + gen() % 16};
      shapes.push_back(sh);
    }
    const double s = 0.5 + 0.45 * static_cast<double>(gen() % 1000) / 1000.0;
    auto m = compute_distribution(spec_of(DistributionKind::kErk, s), tree_of(shapes));
    const auto density = erk_oracle(shapes, s);
    std::size_t total = 0, zeros = 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      const std::size_t n = num_elements(shapes[i]);
      const double got = m.at("l" + std::to_string(i) + "/kernel");
      EXPECT_GE(got, 0.0);
      EXPECT_LT(got, 1.0);
      EXPECT_NEAR(got, 1 - density[i], 1.0 / static_cast<double>(n) + 1e-12);
      total += n;
      zeros += zero_count(got, n);
    }
    EXPECT_LE(std::abs(static_cast<double>(zeros) / total - s), 1.0 / total);
  }
}

TEST(Distribution, FilteredOutGetsZero) {
  ParamTree t{{"a/kernel", Tensor({8, 8})}, {"a/bias", Tensor({8})}, {"embed/kernel", Tensor({8, 8})}};
  DistributionSpec d = spec_of(DistributionKind::kErk, 0.7);
  d.exclude = {"embed/*"};
  auto m = compute_distribution(d, t);
  EXPECT_EQ(m.at("a/bias"), 0.0);
  EXPECT_EQ(m.at("embed/kernel"), 0.0);
  EXPECT_EQ(m.at("a/kernel"), 0.7);
}

TEST(Distribution, RejectsEmptyTree) {
  EXPECT_THROW(compute_distribution(spec_of(DistributionKind::kUniform, 0.5), ParamTree{}), ArgumentError);
}
