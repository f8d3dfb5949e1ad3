#include "sparsekit/distribution.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <numeric>

#include "sparsekit/structure.hpp"

namespace sparsekit {

std::string to_string(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::kUniform: return "uniform";
    case DistributionKind::kErk: return "erk";
    case DistributionKind::kCustomMap: return "custom_map";
  }
  return "unknown";
}

DistributionKind parse_distribution_kind(const std::string& name) {
  if (name == "uniform") return DistributionKind::kUniform;
  if (name == "erk") return DistributionKind::kErk;
  if (name == "custom_map" || name == "custom") return DistributionKind::kCustomMap;
  throw ConfigError("unknown distribution kind '" + name + "'");
}

bool default_filter(const std::string&, const Shape& shape) { return shape.size() != 1; }

bool DistributionSpec::sparsifies(const std::string& path, const Shape& shape) const {
  if (!default_filter(path, shape)) return false;
  for (const auto& pattern : exclude) {
    if (fnmatch(pattern.c_str(), path.c_str(), 0) == 0) return false;
  }
  return !user_filter || user_filter(path, shape);
}

void DistributionSpec::validate() const {
  if (!(target_sparsity >= 0.0 && target_sparsity < 1.0)) {
    throw ConfigError("target sparsity must lie in [0, 1), got " + std::to_string(target_sparsity));
  }
  for (const auto& [path, s] : custom) {
    if (!(s >= 0.0 && s < 1.0)) {
      throw ConfigError("custom sparsity for '" + path + "' must lie in [0, 1)");
    }
  }
}

namespace {

struct ErkLayer {
  std::string path;
  double count;
  double raw_density;  // (sum of dims) / (product of dims)
  bool capped = false;
  double sparsity = 0.0;
};

void solve_erk(std::vector<ErkLayer>& layers, double target) {
  const double total = std::accumulate(layers.begin(), layers.end(), 0.0,
                                       [](double acc, const ErkLayer& l) { return acc + l.count; });
  if (target == 0.0) return;
  // Raising epsilon never un-caps a layer, so capping every offender per
  // round converges in at most one round per layer.
  while (true) {
    double budget = (1.0 - target) * total;
    double weighted = 0.0;
    for (const auto& l : layers) {
      if (l.capped) budget -= l.count;
      else weighted += l.raw_density * l.count;
    }
    if (weighted == 0.0 || budget <= 0.0) {
      throw ConfigError("ERK distribution infeasible: every layer would need to stay dense");
    }
    const double eps = budget / weighted;
    bool changed = false;
    for (auto& l : layers) {
      if (!l.capped && eps * l.raw_density > 1.0) {
        l.capped = true;
        changed = true;
      }
    }
    if (!changed) {
      for (auto& l : layers) l.sparsity = l.capped ? 0.0 : 1.0 - eps * l.raw_density;
      return;
    }
  }
}

// Moves single elements between layers so the realized per-layer zero counts
// add up to the rounded global target.
void reconcile_rounding(std::vector<ErkLayer>& layers, double target) {
  std::size_t total = 0;
  std::vector<std::size_t> zeros(layers.size());
  std::size_t realized = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto n = static_cast<std::size_t>(layers[i].count);
    total += n;
    zeros[i] = zero_count(layers[i].sparsity, n);
    realized += zeros[i];
  }
  const std::size_t wanted = zero_count(target, total);
  if (realized == wanted) return;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].capped) order.push_back(i);
  }
  auto residual = [&](std::size_t i) { return layers[i].sparsity * layers[i].count - static_cast<double>(zeros[i]); };
  const bool add = wanted > realized;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return add ? residual(a) > residual(b) : residual(a) < residual(b);
  });
  std::size_t remaining = add ? wanted - realized : realized - wanted;
  for (std::size_t pass = 0; remaining > 0 && pass < 2; ++pass) {
    for (std::size_t i : order) {
      if (remaining == 0) break;
      const auto n = static_cast<std::size_t>(layers[i].count);
      if (add && zeros[i] + 1 < n) {
        ++zeros[i];
      } else if (!add && zeros[i] > 0) {
        --zeros[i];
      } else {
        continue;
      }
      layers[i].sparsity = static_cast<double>(zeros[i]) / static_cast<double>(n);
      --remaining;
    }
  }
}

}  // namespace

SparsityMap compute_distribution(const DistributionSpec& spec, const ParamTree& params) {
  if (params.empty()) throw ArgumentError("cannot compute a sparsity distribution for an empty tree");
  spec.validate();

  SparsityMap out;
  for (const auto& [path, tensor] : params) out[path] = 0.0;

  switch (spec.kind) {
    case DistributionKind::kUniform:
      for (const auto& [path, tensor] : params) {
        if (spec.sparsifies(path, tensor.shape())) out[path] = spec.target_sparsity;
      }
      break;
    case DistributionKind::kCustomMap:
      for (const auto& [path, tensor] : params) {
        if (!spec.sparsifies(path, tensor.shape())) continue;
        auto it = spec.custom.find(path);
        if (it == spec.custom.end()) {
          throw ConfigError("custom sparsity map has no entry for parameter '" + path + "'");
        }
        out[path] = it->second;
      }
      break;
    case DistributionKind::kErk: {
      std::vector<ErkLayer> layers;
      for (const auto& [path, tensor] : params) {
        if (!spec.sparsifies(path, tensor.shape())) continue;
        const Shape& shape = tensor.shape();
        const double sum = std::accumulate(shape.begin(), shape.end(), 0.0);
        const auto count = static_cast<double>(tensor.size());
        layers.push_back(ErkLayer{path, count, count > 0 ? sum / count : 0.0});
      }
      if (layers.empty()) break;
      if (layers.size() == 1) {
        out[layers.front().path] = spec.target_sparsity;
        break;
      }
      solve_erk(layers, spec.target_sparsity);
      reconcile_rounding(layers, spec.target_sparsity);
      for (const auto& l : layers) out[l.path] = l.sparsity;
      break;
    }
  }
  return out;
}

}  // namespace sparsekit
