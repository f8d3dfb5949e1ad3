#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "sparsekit/tensor.hpp"

namespace sparsekit {

enum class StructureKind { kUnstructured, kNByM, kBlock };

/// Shape of the sparsity pattern.
///
/// N:M groups run along the last dimension. Blocks tile the first two
/// dimensions; trailing dimensions are pooled into each block.
struct StructureSpec {
  StructureKind kind = StructureKind::kUnstructured;
  std::size_t n = 0;
  std::size_t m = 0;
  std::pair<std::size_t, std::size_t> block_dims{1, 1};

  static StructureSpec unstructured() { return {}; }
  static StructureSpec n_by_m(std::size_t n, std::size_t m);
  static StructureSpec block(std::size_t rows, std::size_t cols);

  void validate() const;
  /// Sparsity fully determined by the structure (N:M only).
  [[nodiscard]] bool fixes_sparsity() const { return kind == StructureKind::kNByM; }
  [[nodiscard]] double implied_sparsity() const;

  friend bool operator==(const StructureSpec&, const StructureSpec&) = default;
};

std::string to_string(const StructureSpec& spec);
/// Parses "unstructured", "N:M" (e.g. "2:4") or "RxC" (e.g. "4x4").
StructureSpec parse_structure(const std::string& text);

/// Zeros removed from n elements at sparsity s: round(s * n), halves rounded up.
std::size_t zero_count(double sparsity, std::size_t n);

/// Binary (0/1) keep-mask of the same shape as `scores`.
///
/// Throws StructureError when the shape does not divide into the structure's
/// groups; `path` only labels that error.
Tensor structured_mask(const Tensor& scores, double sparsity, const StructureSpec& spec,
                       const std::string& path = "<tensor>");

}  // namespace sparsekit
