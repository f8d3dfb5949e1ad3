#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sparsekit/rng.hpp"
#include "sparsekit/tensor.hpp"

namespace sparsekit {

/// Row-major batch of feature vectors.
struct Batch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> features;
  std::vector<int> labels;
};

/// Fully connected ReLU network. Parameters are "layerK/kernel" with shape
/// (dims[K], dims[K+1]) and "layerK/bias" with shape (dims[K+1],); the last
/// layer has no activation.
class Mlp {
 public:
  /// Throws ArgumentError for fewer than two dims or a zero dim.
  explicit Mlp(std::vector<std::size_t> layer_dims);

  [[nodiscard]] const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  [[nodiscard]] std::size_t num_layers() const noexcept { return dims_.size() - 1; }

  static std::string kernel_path(std::size_t layer);
  static std::string bias_path(std::size_t layer);

  /// He-normal kernels, zero biases.
  [[nodiscard]] ParamTree init(const RngKey& key) const;

  /// Logits of shape (batch.rows, dims.back()).
  [[nodiscard]] Tensor forward(const ParamTree& params, const Batch& batch) const;

  struct LossAndGrads {
    double loss = 0.0;
    ParamTree grads;
  };
  /// Mean softmax cross-entropy over the batch and its exact gradient.
  [[nodiscard]] LossAndGrads loss_and_grads(const ParamTree& params, const Batch& batch) const;
  [[nodiscard]] double loss(const ParamTree& params, const Batch& batch) const;

  /// Fraction of rows whose argmax logit equals the label.
  [[nodiscard]] double accuracy(const ParamTree& params, const Batch& batch) const;

 private:
  void check(const ParamTree& params, const Batch& batch) const;
  std::vector<std::vector<double>> activations(const ParamTree& params, const Batch& batch) const;

  std::vector<std::size_t> dims_;
};

}  // namespace sparsekit
