#include <gtest/gtest.h>

#include <random>

#include "sparsekit/errors.hpp"
#include "sparsekit/mask.hpp"

using namespace sparsekit;

TEST(Pack, Examples) {
  const std::vector<std::uint8_t> a{1, 0, 1, 1, 0, 0, 0, 1};
  EXPECT_EQ(pack_mask(a), (PackedBits{{141}, 8}));
  const std::vector<std::uint8_t> full(8, 1);
  EXPECT_EQ(pack_mask(full), (PackedBits{{255}, 8}));
  const std::vector<std::uint8_t> part{1, 1, 0};
  const PackedBits p = pack_mask(part);
  EXPECT_EQ(p, (PackedBits{{3}, 3}));
  EXPECT_EQ(unpack_mask(p), part);
}

TEST(Pack, RejectsNonBinary) {
  const std::vector<std::uint8_t> bad{1, 2};
  EXPECT_THROW(pack_mask(bad), DataError);
  EXPECT_THROW(unpack_mask(PackedBits{{1, 0}, 3}), DataError);
}

TEST(Pack, RoundtripAllLengths) {
  std::mt19937_64 gen(5);
  for (std::size_t n = 0; n <= 1000; ++n) {
    std::vector<std::uint8_t> m(n);
    for (auto& b : m) b = static_cast<std::uint8_t>(gen() & 1U);
    const PackedBits p = pack_mask(m);
    ASSERT_EQ(p.bytes.size(), (n + 7) / 8);
    ASSERT_EQ(unpack_mask(p), m);
  }
}

TEST(MaskValue, EncodingsAreInterchangeable) {
  const Tensor keep({2, 3}, {1, 0, 1, 1, 0, 0});
  const Mask bytes = Mask::from_tensor(keep);
  const Mask packed = Mask::from_tensor(keep, MaskEncoding::kPacked);
  EXPECT_EQ(bytes, packed);
  EXPECT_FALSE(bytes.identical(packed));
  EXPECT_TRUE(bytes.identical(packed.with_encoding(MaskEncoding::kBytes)));
  EXPECT_EQ(packed.count_nonzero(), 3U);
  EXPECT_EQ(packed.storage().size(), 1U);
  EXPECT_EQ(bytes.storage().size(), 6U);
  EXPECT_EQ(packed.to_tensor(), keep);
}

TEST(MaskValue, Apply) {
  const Mask m = Mask::from_tensor(Tensor::vector({1, 0, 1}));
  const Tensor p = Tensor::vector({1, 2, 3});
  EXPECT_EQ(m.apply(p), Tensor::vector({1, 0, 3}));
  EXPECT_EQ(m.apply(m.apply(p)), m.apply(p));
  EXPECT_EQ(Mask::ones({3}).apply(p), p);
}

TEST(Summary, Counting) {
  MaskTree masks;
  masks.emplace("w", Mask::from_tensor(Tensor::vector({1, 0, 1, 1})));
  const auto s = sparsity_summary(masks);
  EXPECT_DOUBLE_EQ(s.per_path.at("w").sparsity(), 0.25);
  EXPECT_DOUBLE_EQ(s.total.sparsity(), 0.25);
}

TEST(Summary, NoMasksIsDense) {
  ParamTree params{{"w", Tensor({3, 3})}, {"b", Tensor({3})}};
  EXPECT_EQ(sparsity_summary(MaskTree{}, params).total.sparsity(), 0.0);
  EXPECT_EQ(sparsity_summary(MaskTree{}).total.sparsity(), 0.0);
}

TEST(Summary, DenseRankOneLowersWholeModelFigure) {
  // 10x10 kernel at 80% plus a dense bias of 10.
  std::vector<std::uint8_t> keep(100, 0);
  for (std::size_t i = 0; i < 20; ++i) keep[i] = 1;
  MaskTree masks;
  masks.emplace("k", Mask({10, 10}, keep));
  ParamTree params{{"k", Tensor({10, 10})}, {"b", Tensor({10})}};
  const auto s = sparsity_summary(masks, params);
  EXPECT_DOUBLE_EQ(s.masked.sparsity(), 0.8);
  EXPECT_DOUBLE_EQ(s.total.sparsity(), 80.0 / 110.0);
  EXPECT_LT(s.total.sparsity(), 0.8);
}

TEST(ApplyMasks, LeavesMasklessParams) {
  MaskTree masks;
  masks.emplace("k", Mask::from_tensor(Tensor::vector({0, 1})));
  ParamTree params{{"k", Tensor::vector({5, 6})}, {"b", Tensor::vector({7})}};
  const ParamTree out = apply_masks(params, masks);
  EXPECT_EQ(out.at("k"), Tensor::vector({0, 6}));
  EXPECT_EQ(out.at("b"), Tensor::vector({7}));
}
