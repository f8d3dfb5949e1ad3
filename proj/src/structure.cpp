#include "sparsekit/structure.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

namespace sparsekit {

StructureSpec StructureSpec::n_by_m(std::size_t n, std::size_t m) {
  StructureSpec spec;
  spec.kind = StructureKind::kNByM;
  spec.n = n;
  spec.m = m;
  spec.validate();
  return spec;
}

StructureSpec StructureSpec::block(std::size_t rows, std::size_t cols) {
  StructureSpec spec;
  spec.kind = StructureKind::kBlock;
  spec.block_dims = {rows, cols};
  spec.validate();
  return spec;
}

void StructureSpec::validate() const {
  switch (kind) {
    case StructureKind::kUnstructured: return;
    case StructureKind::kNByM:
      if (n == 0 || m == 0 || n >= m) {
        throw ConfigError("N:M structure needs 0 < n < m, got " + std::to_string(n) + ":" + std::to_string(m));
      }
      return;
    case StructureKind::kBlock:
      if (block_dims.first == 0 || block_dims.second == 0) {
        throw ConfigError("block dimensions must be positive");
      }
      return;
  }
}

double StructureSpec::implied_sparsity() const {
  return kind == StructureKind::kNByM ? 1.0 - static_cast<double>(n) / static_cast<double>(m) : 0.0;
}

std::string to_string(const StructureSpec& spec) {
  switch (spec.kind) {
    case StructureKind::kUnstructured: return "unstructured";
    case StructureKind::kNByM: return std::to_string(spec.n) + ":" + std::to_string(spec.m);
    case StructureKind::kBlock:
      return std::to_string(spec.block_dims.first) + "x" + std::to_string(spec.block_dims.second);
  }
  return "unknown";
}

StructureSpec parse_structure(const std::string& text) {
  if (text.empty() || text == "unstructured") return StructureSpec::unstructured();
  static const std::regex nm(R"((\d+):(\d+))");
  static const std::regex blk(R"((\d+)[xX](\d+))");
  std::smatch match;
  if (std::regex_match(text, match, nm)) {
    return StructureSpec::n_by_m(std::stoul(match[1]), std::stoul(match[2]));
  }
  if (std::regex_match(text, match, blk)) {
    return StructureSpec::block(std::stoul(match[1]), std::stoul(match[2]));
  }
  throw ConfigError("cannot parse sparsity structure '" + text + "'");
}

std::size_t zero_count(double sparsity, std::size_t n) {
  // The slack absorbs products like 0.35 * 10 = 3.4999999999999996.
  const double exact = sparsity * static_cast<double>(n);
  const double rounded = std::floor(exact + 0.5 + 1e-9 * std::max(1.0, exact));
  return std::min(n, static_cast<std::size_t>(std::max(0.0, rounded)));
}

namespace {

void keep_top(std::span<const double> scores, std::size_t keep, std::span<double> mask) {
  for (std::size_t idx : topk_indices(scores, keep)) mask[idx] = 1.0;
}

}  // namespace

Tensor structured_mask(const Tensor& scores, double sparsity, const StructureSpec& spec, const std::string& path) {
  spec.validate();
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw ArgumentError("sparsity must lie in [0, 1], got " + std::to_string(sparsity));
  }
  for (double s : scores.data()) {
    if (!std::isfinite(s)) throw ArgumentError("non-finite score in '" + path + "'");
  }
  const Shape& shape = scores.shape();
  Tensor mask(shape);
  const std::size_t total = scores.size();

  switch (spec.kind) {
    case StructureKind::kUnstructured:
      keep_top(scores.data(), total - zero_count(sparsity, total), mask.data());
      break;

    case StructureKind::kNByM: {
      if (shape.back() % spec.m != 0) {
        throw StructureError("'" + path + "' with shape " + shape_to_string(shape) + ": last dimension " +
                             std::to_string(shape.back()) + " is not divisible by M=" + std::to_string(spec.m));
      }
      for (std::size_t start = 0; start < total; start += spec.m) {
        keep_top(scores.data().subspan(start, spec.m), spec.n, mask.data().subspan(start, spec.m));
      }
      break;
    }

    case StructureKind::kBlock: {
      if (shape.size() < 2) {
        throw StructureError("'" + path + "' with shape " + shape_to_string(shape) +
                             ": block sparsity needs rank >= 2");
      }
      const auto [br, bc] = spec.block_dims;
      if (shape[0] % br != 0 || shape[1] % bc != 0) {
        throw StructureError("'" + path + "' with shape " + shape_to_string(shape) + ": first two dimensions are "
                             "not divisible by block " + std::to_string(br) + "x" + std::to_string(bc));
      }
      const std::size_t inner = total / (shape[0] * shape[1]);
      const std::size_t block_rows = shape[0] / br;
      const std::size_t block_cols = shape[1] / bc;
      const double per_block = static_cast<double>(br * bc * inner);
      auto offset = [&](std::size_t r, std::size_t c) { return (r * shape[1] + c) * inner; };

      std::vector<double> pooled(block_rows * block_cols, 0.0);
      for (std::size_t r = 0; r < shape[0]; ++r) {
        for (std::size_t c = 0; c < shape[1]; ++c) {
          double& cell = pooled[(r / br) * block_cols + c / bc];
          for (std::size_t k = 0; k < inner; ++k) cell += scores[offset(r, c) + k];
        }
      }
      for (double& v : pooled) v /= per_block;

      const std::size_t blocks = pooled.size();
      std::vector<double> keep(blocks, 0.0);
      keep_top(pooled, blocks - zero_count(sparsity, blocks), keep);
      for (std::size_t r = 0; r < shape[0]; ++r) {
        for (std::size_t c = 0; c < shape[1]; ++c) {
          const double v = keep[(r / br) * block_cols + c / bc];
          for (std::size_t k = 0; k < inner; ++k) mask[offset(r, c) + k] = v;
        }
      }
      break;
    }
  }
  return mask;
}

}  // namespace sparsekit
