#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparsekit/distribution.hpp"
#include "sparsekit/mask.hpp"
#include "sparsekit/optim.hpp"
#include "sparsekit/rng.hpp"
#include "sparsekit/schedule.hpp"
#include "sparsekit/structure.hpp"

namespace sparsekit {

enum class AlgorithmKind {
  kRandomPrune,
  kMagnitudePrune,
  kSaliencyPrune,
  kGlobalMagnitudePrune,
  kSteMagnitude,
  kStaticSparse,
  kSetSparse,
  kRigLSparse,
};

std::string to_string(AlgorithmKind kind);
/// Accepts canonical names ("magnitude_prune") and short aliases ("mag",
/// "rand", "sal", "mag-g", "ste", "static", "set", "rigl").
AlgorithmKind parse_algorithm(const std::string& name);

bool requires_gradients(AlgorithmKind kind);
/// Rand / Mag / Sal / Mag-G: start dense, masks follow the schedule.
bool is_gradual_pruning(AlgorithmKind kind);
/// Static / SET / RigL: start sparse at the target and keep the nonzero count.
bool is_sparse_training(AlgorithmKind kind);

struct DropGrowConfig {
  double initial_drop_fraction = 0.1;

  void validate() const;
  friend bool operator==(const DropGrowConfig&, const DropGrowConfig&) = default;
};

/// Everything that describes one sparsity arm of an experiment.
struct UpdaterConfig {
  AlgorithmKind algorithm = AlgorithmKind::kMagnitudePrune;
  DistributionSpec distribution;
  ScheduleConfig schedule;
  StructureSpec structure;
  DropGrowConfig drop_grow;
  bool use_packed_masks = false;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError on invalid or mutually inconsistent settings.
  void validate() const;
  [[nodiscard]] MaskEncoding mask_encoding() const {
    return use_packed_masks ? MaskEncoding::kPacked : MaskEncoding::kBytes;
  }
  [[nodiscard]] RngKey root_key() const { return RngKey{rng_seed, 0}; }
};

/// Mutable sparsity bookkeeping, carried as the extension of the wrapped
/// optimizer's OptState. The step counter and inner optimizer state live in
/// that OptState (`step` and `nested[0]`).
struct SparsityState final : StateExtension {
  MaskTree masks;
  SparsityMap targets;
  std::map<std::string, ParamTree> algo_slots;

  [[nodiscard]] bool equals(const StateExtension& other) const override;
};

// Scoring ----------------------------------------------------------------

/// Non-negative importance scores: |w| (magnitude, STE, SET), |w * g|
/// (saliency), or uniform draws keyed by path (random, static).
///
/// Throws ArgumentError when the criterion needs gradients or a key that was
/// not supplied, or for RigL (which scores growth, not weights).
ParamTree score(AlgorithmKind kind, const ParamTree& params, const ParamTree* grads,
                const std::optional<RngKey>& key);

/// Single top-k over the L2-normalized magnitudes of all `paths`, split back
/// into per-layer masks. Layers with zero norm score as all zeros.
MaskTree global_magnitude_masks(const ParamTree& params, const std::vector<std::string>& paths, double sparsity,
                                MaskEncoding encoding = MaskEncoding::kBytes);

// Gradual pruning ----------------------------------------------------------

/// Masks recomputed from current scores at the scheduled sparsity of `step`.
MaskTree gradual_prune_update(const UpdaterConfig& cfg, const SparsityState& state, const ParamTree& params,
                              const ParamTree* grads, std::int64_t step);

// Straight-through estimator ---------------------------------------------

/// Top-k magnitude masks at the scheduled sparsity of `step`.
MaskTree ste_masks(const UpdaterConfig& cfg, const SparsityMap& targets, const ParamTree& params,
                   std::int64_t step);

/// Forward-pass view of the dense parameters; dense values stay untouched.
ParamTree ste_forward_projection(const UpdaterConfig& cfg, const SparsityState& state, const ParamTree& params,
                                 std::int64_t step);

// Sparse training ----------------------------------------------------------

/// Cosine-decayed drop fraction d0 / 2 * (1 + cos(pi * min(step, t_end) / t_end)).
double drop_fraction(const DropGrowConfig& cfg, std::int64_t step, std::int64_t end_step);

struct MaskChange {
  MaskTree masks;
  std::map<std::string, std::vector<std::size_t>> dropped;
  std::map<std::string, std::vector<std::size_t>> grown;
};

/// One SET / RigL exchange per masked layer: drop the k = round(d_t * active)
/// smallest active magnitudes, then grow k previously inactive coordinates
/// (random for SET, largest |g| for RigL). Grown weights must start at zero.
MaskChange drop_grow_update(const UpdaterConfig& cfg, const SparsityState& state, const ParamTree& params,
                            const ParamTree* grads, std::int64_t step);

/// Same exchange with an explicit drop fraction.
MaskChange drop_grow_with_fraction(AlgorithmKind kind, const MaskTree& masks, const ParamTree& params,
                                   const ParamTree* grads, double fraction, const RngKey& key);

/// Random masks at the per-layer targets, used by every sparse-training
/// algorithm at step 0.
MaskTree static_init(const UpdaterConfig& cfg, const SparsityMap& targets, const ParamTree& params);

}  // namespace sparsekit
