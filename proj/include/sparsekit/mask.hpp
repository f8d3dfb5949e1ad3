#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sparsekit/tensor.hpp"

namespace sparsekit {

/// Bitset with LSB-first packing: bit i of byte j holds element 8j + i.
struct PackedBits {
  std::vector<std::uint8_t> bytes;
  std::size_t count = 0;

  friend bool operator==(const PackedBits&, const PackedBits&) = default;
};

/// Throws DataError if any value is not 0 or 1.
PackedBits pack_mask(std::span<const std::uint8_t> mask);
std::vector<std::uint8_t> unpack_mask(const PackedBits& packed);

enum class MaskEncoding { kBytes, kPacked };

/// Binary mask over a parameter, stored either as one byte per element or
/// bit-packed. Both encodings answer every query identically.
class Mask {
 public:
  Mask() = default;
  Mask(Shape shape, std::vector<std::uint8_t> bytes, MaskEncoding encoding = MaskEncoding::kBytes);
  Mask(Shape shape, PackedBits bits);

  /// Mask from a 0/1 tensor; any nonzero entry counts as kept.
  static Mask from_tensor(const Tensor& keep, MaskEncoding encoding = MaskEncoding::kBytes);
  static Mask ones(const Shape& shape, MaskEncoding encoding = MaskEncoding::kBytes);

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t size() const noexcept;
  [[nodiscard]] MaskEncoding encoding() const noexcept;

  [[nodiscard]] bool get(std::size_t i) const;
  [[nodiscard]] std::vector<std::uint8_t> to_bytes() const;
  [[nodiscard]] Tensor to_tensor() const;
  [[nodiscard]] Mask with_encoding(MaskEncoding encoding) const;
  /// Bytes held by the current representation.
  [[nodiscard]] std::span<const std::uint8_t> storage() const;

  [[nodiscard]] std::size_t count_nonzero() const;
  /// Elementwise product with a tensor of the same shape.
  [[nodiscard]] Tensor apply(const Tensor& values) const;

  /// Equal when shapes and element values match, regardless of encoding.
  friend bool operator==(const Mask& a, const Mask& b);
  /// Equal including the encoding.
  [[nodiscard]] bool identical(const Mask& other) const;

 private:
  Shape shape_{0};
  std::variant<std::vector<std::uint8_t>, PackedBits> data_;
};

using MaskTree = std::map<std::string, Mask>;

/// Masks every tree entry that has a mask; other entries pass through.
ParamTree apply_masks(const ParamTree& params, const MaskTree& masks);

struct SparsityStats {
  std::size_t nonzeros = 0;
  std::size_t size = 0;
  [[nodiscard]] double sparsity() const {
    return size == 0 ? 0.0 : static_cast<double>(size - nonzeros) / static_cast<double>(size);
  }
};

struct SparsitySummary {
  std::map<std::string, SparsityStats> per_path;
  /// Pooled over masked paths only.
  SparsityStats masked;
  /// Pooled over the whole model; maskless parameters count as dense.
  SparsityStats total;
};

SparsitySummary sparsity_summary(const MaskTree& masks);
/// Also pools the parameters of `params` that carry no mask.
SparsitySummary sparsity_summary(const MaskTree& masks, const ParamTree& params);

}  // namespace sparsekit
