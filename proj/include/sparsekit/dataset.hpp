#pragma once

#include <cstdint>
#include <string>

#include "sparsekit/mlp.hpp"

namespace sparsekit {

struct DatasetSpec {
  /// "gaussian_blobs" or "two_spirals".
  std::string generator = "gaussian_blobs";
  std::size_t n_samples = 1000;
  std::size_t n_features = 2;
  std::size_t n_classes = 3;
  double noise = 1.0;
  std::uint64_t seed = 0;
  /// Trailing share of the samples held out for evaluation.
  double eval_fraction = 0.2;

  void validate() const;
};

/// Labels are assigned round-robin (sample i has class i mod k), so class
/// counts differ by at most one. Blob centres sit on a circle of radius 2 in
/// the first two features; `noise` is the per-feature standard deviation.
Batch generate_dataset(const DatasetSpec& spec);

struct DataSplit {
  Batch train;
  Batch eval;
};

DataSplit split_dataset(const Batch& data, double eval_fraction);

/// Rows of `data` at `indices`, in order.
Batch gather_rows(const Batch& data, const std::vector<std::size_t>& indices);

}  // namespace sparsekit
