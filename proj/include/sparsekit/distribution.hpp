#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparsekit/tensor.hpp"

namespace sparsekit {

enum class DistributionKind { kUniform, kErk, kCustomMap };

std::string to_string(DistributionKind kind);
DistributionKind parse_distribution_kind(const std::string& name);

using ParamFilter = std::function<bool(const std::string& path, const Shape& shape)>;

/// Keeps rank-1 parameters (biases, norm scales) dense.
bool default_filter(const std::string& path, const Shape& shape);

/// How much sparsity each parameter receives.
///
/// A parameter is sparsified iff the default filter accepts it, no exclude
/// glob matches its path, and the optional user filter accepts it.
struct DistributionSpec {
  DistributionKind kind = DistributionKind::kUniform;
  double target_sparsity = 0.0;
  std::map<std::string, double> custom;
  /// fnmatch-style globs; '*' also matches '/'.
  std::vector<std::string> exclude;
  ParamFilter user_filter;

  [[nodiscard]] bool sparsifies(const std::string& path, const Shape& shape) const;
  void validate() const;
};

using SparsityMap = std::map<std::string, double>;

/// Per-path target sparsity for every entry of `params`; filtered-out paths
/// get exactly 0.
///
/// For ERK the solved per-layer values are nudged by at most one element per
/// layer so that the realized zero counts sum to round(target * total).
SparsityMap compute_distribution(const DistributionSpec& spec, const ParamTree& params);

}  // namespace sparsekit
