#include "sparsekit/mask.hpp"

#include <algorithm>
#include <bit>

namespace sparsekit {

PackedBits pack_mask(std::span<const std::uint8_t> mask) {
  PackedBits out;
  out.count = mask.size();
  out.bytes.assign((mask.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const std::uint8_t v = mask[i];
    if (v > 1) {
      throw DataError("mask element " + std::to_string(i) + " has value " + std::to_string(v) + ", expected 0 or 1");
    }
    out.bytes[i / 8] |= static_cast<std::uint8_t>(v << (i % 8));
  }
  return out;
}

std::vector<std::uint8_t> unpack_mask(const PackedBits& packed) {
  if (packed.bytes.size() != (packed.count + 7) / 8) {
    throw DataError("packed mask holds " + std::to_string(packed.bytes.size()) + " bytes for " +
                    std::to_string(packed.count) + " elements");
  }
  std::vector<std::uint8_t> out(packed.count);
  for (std::size_t i = 0; i < packed.count; ++i) out[i] = (packed.bytes[i / 8] >> (i % 8)) & 1U;
  return out;
}

Mask::Mask(Shape shape, std::vector<std::uint8_t> bytes, MaskEncoding encoding) : shape_(std::move(shape)) {
  if (bytes.size() != num_elements(shape_)) {
    throw StructuralError("mask of " + std::to_string(bytes.size()) + " elements does not match shape " +
                          shape_to_string(shape_));
  }
  if (encoding == MaskEncoding::kPacked) {
    data_ = pack_mask(bytes);
  } else {
    for (std::uint8_t v : bytes) {
      if (v > 1) throw DataError("mask values must be 0 or 1");
    }
    data_ = std::move(bytes);
  }
}

Mask::Mask(Shape shape, PackedBits bits) : shape_(std::move(shape)) {
  if (bits.count != num_elements(shape_) || bits.bytes.size() != (bits.count + 7) / 8) {
    throw StructuralError("packed mask does not match shape " + shape_to_string(shape_));
  }
  if (bits.count % 8 != 0 && !bits.bytes.empty()) {
    const auto padding = static_cast<std::uint8_t>(0xFFU << (bits.count % 8));
    if (bits.bytes.back() & padding) throw DataError("packed mask has bits set past its element count");
  }
  data_ = std::move(bits);
}

Mask Mask::from_tensor(const Tensor& keep, MaskEncoding encoding) {
  std::vector<std::uint8_t> bytes(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) bytes[i] = keep[i] != 0.0 ? 1 : 0;
  return Mask(keep.shape(), std::move(bytes), encoding);
}

Mask Mask::ones(const Shape& shape, MaskEncoding encoding) {
  return Mask(shape, std::vector<std::uint8_t>(num_elements(shape), 1), encoding);
}

std::size_t Mask::size() const noexcept { return num_elements(shape_); }

MaskEncoding Mask::encoding() const noexcept {
  return std::holds_alternative<PackedBits>(data_) ? MaskEncoding::kPacked : MaskEncoding::kBytes;
}

bool Mask::get(std::size_t i) const {
  if (const auto* bytes = std::get_if<std::vector<std::uint8_t>>(&data_)) return (*bytes)[i] != 0;
  const auto& bits = std::get<PackedBits>(data_);
  return ((bits.bytes[i / 8] >> (i % 8)) & 1U) != 0;
}

std::vector<std::uint8_t> Mask::to_bytes() const {
  if (const auto* bytes = std::get_if<std::vector<std::uint8_t>>(&data_)) return *bytes;
  return unpack_mask(std::get<PackedBits>(data_));
}

Tensor Mask::to_tensor() const {
  Tensor out(shape_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = get(i) ? 1.0 : 0.0;
  return out;
}

Mask Mask::with_encoding(MaskEncoding encoding) const {
  if (encoding == this->encoding()) return *this;
  return Mask(shape_, to_bytes(), encoding);
}

std::span<const std::uint8_t> Mask::storage() const {
  if (const auto* bytes = std::get_if<std::vector<std::uint8_t>>(&data_)) return *bytes;
  return std::get<PackedBits>(data_).bytes;
}

std::size_t Mask::count_nonzero() const {
  std::size_t n = 0;
  if (const auto* bytes = std::get_if<std::vector<std::uint8_t>>(&data_)) {
    for (std::uint8_t v : *bytes) n += v;
    return n;
  }
  for (std::uint8_t b : std::get<PackedBits>(data_).bytes) n += static_cast<std::size_t>(std::popcount(b));
  return n;
}

Tensor Mask::apply(const Tensor& values) const {
  if (values.shape() != shape_) {
    throw StructuralError("mask shape " + shape_to_string(shape_) + " does not match tensor shape " +
                          shape_to_string(values.shape()));
  }
  Tensor out = values;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!get(i)) out[i] = 0.0;
  }
  return out;
}

bool operator==(const Mask& a, const Mask& b) {
  if (a.shape_ != b.shape_) return false;
  if (a.encoding() == b.encoding()) return a.data_ == b.data_;
  return a.to_bytes() == b.to_bytes();
}

bool Mask::identical(const Mask& other) const { return shape_ == other.shape_ && data_ == other.data_; }

ParamTree apply_masks(const ParamTree& params, const MaskTree& masks) {
  ParamTree out = params;
  for (const auto& [path, mask] : masks) {
    if (!params.contains(path)) throw StructuralError("mask for unknown parameter '" + path + "'");
    out.set(path, mask.apply(params.at(path)));
  }
  return out;
}

namespace {

SparsitySummary summarize(const MaskTree& masks, const ParamTree* params) {
  SparsitySummary out;
  for (const auto& [path, mask] : masks) {
    SparsityStats stats{mask.count_nonzero(), mask.size()};
    out.per_path[path] = stats;
    out.masked.nonzeros += stats.nonzeros;
    out.masked.size += stats.size;
  }
  out.total = out.masked;
  if (params != nullptr) {
    for (const auto& [path, tensor] : *params) {
      if (masks.contains(path)) continue;
      out.total.nonzeros += tensor.size();
      out.total.size += tensor.size();
    }
  }
  return out;
}

}  // namespace

SparsitySummary sparsity_summary(const MaskTree& masks) { return summarize(masks, nullptr); }

SparsitySummary sparsity_summary(const MaskTree& masks, const ParamTree& params) {
  return summarize(masks, &params);
}

}  // namespace sparsekit
