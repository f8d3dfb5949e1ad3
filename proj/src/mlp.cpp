#include "sparsekit/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace sparsekit {

Mlp::Mlp(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) throw ArgumentError("an MLP needs at least an input and an output dimension");
  if (std::find(dims_.begin(), dims_.end(), std::size_t{0}) != dims_.end()) {
    throw ArgumentError("MLP layer dimensions must be positive");
  }
}

std::string Mlp::kernel_path(std::size_t layer) { return "layer" + std::to_string(layer) + "/kernel"; }
std::string Mlp::bias_path(std::size_t layer) { return "layer" + std::to_string(layer) + "/bias"; }

ParamTree Mlp::init(const RngKey& key) const {
  ParamTree params;
  for (std::size_t k = 0; k < num_layers(); ++k) {
    const std::size_t fan_in = dims_[k];
    const std::size_t fan_out = dims_[k + 1];
    RngStream rng(derive_key(key, kernel_path(k)));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Tensor kernel({fan_in, fan_out});
    for (double& w : kernel.data()) w = stddev * rng.normal();
    params.set(kernel_path(k), std::move(kernel));
    params.set(bias_path(k), Tensor({fan_out}));
  }
  return params;
}

void Mlp::check(const ParamTree& params, const Batch& batch) const {
  if (batch.cols != dims_.front()) {
    throw ShapeError("input feature dimension " + std::to_string(batch.cols) + " does not match model input " +
                     std::to_string(dims_.front()));
  }
  if (batch.features.size() != batch.rows * batch.cols) throw ShapeError("batch feature buffer has the wrong size");
  for (std::size_t k = 0; k < num_layers(); ++k) {
    if (params.at(kernel_path(k)).shape() != Shape{dims_[k], dims_[k + 1]} ||
        params.at(bias_path(k)).shape() != Shape{dims_[k + 1]}) {
      throw ShapeError("parameters of layer " + std::to_string(k) + " do not match the model dimensions");
    }
  }
}

std::vector<std::vector<double>> Mlp::activations(const ParamTree& params, const Batch& batch) const {
  check(params, batch);
  const std::size_t rows = batch.rows;
  std::vector<std::vector<double>> acts;
  acts.reserve(dims_.size());
  acts.push_back(batch.features);
  for (std::size_t k = 0; k < num_layers(); ++k) {
    const std::size_t in = dims_[k];
    const std::size_t out = dims_[k + 1];
    const auto w = params.at(kernel_path(k)).data();
    const auto b = params.at(bias_path(k)).data();
    const std::vector<double>& x = acts.back();
    std::vector<double> z(rows * out);
    for (std::size_t r = 0; r < rows; ++r) {
      double* zr = &z[r * out];
      std::copy(b.begin(), b.end(), zr);
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = x[r * in + i];
        if (xi == 0.0) continue;
        const double* wi = &w[i * out];
        for (std::size_t j = 0; j < out; ++j) zr[j] += xi * wi[j];
      }
    }
    if (k + 1 < num_layers()) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

Tensor Mlp::forward(const ParamTree& params, const Batch& batch) const {
  auto acts = activations(params, batch);
  return Tensor({batch.rows, dims_.back()}, std::move(acts.back()));
}

namespace {

// Per-row log-softmax, written into `logits` in place; returns mean NLL.
double log_softmax_nll(std::vector<double>& logits, std::size_t rows, std::size_t classes,
                       const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = &logits[r * classes];
    const double peak = *std::max_element(row, row + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - peak);
    const double log_norm = peak + std::log(sum);
    for (std::size_t c = 0; c < classes; ++c) row[c] -= log_norm;
    total -= row[static_cast<std::size_t>(labels[r])];
  }
  return total / static_cast<double>(rows);
}

void check_labels(const Batch& batch, std::size_t classes) {
  if (batch.labels.size() != batch.rows) throw ShapeError("batch needs one label per row");
  for (int label : batch.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ShapeError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

}  // namespace

double Mlp::loss(const ParamTree& params, const Batch& batch) const {
  check_labels(batch, dims_.back());
  auto acts = activations(params, batch);
  return log_softmax_nll(acts.back(), batch.rows, dims_.back(), batch.labels);
}

Mlp::LossAndGrads Mlp::loss_and_grads(const ParamTree& params, const Batch& batch) const {
  check_labels(batch, dims_.back());
  auto acts = activations(params, batch);
  const std::size_t rows = batch.rows;
  const std::size_t classes = dims_.back();

  std::vector<double> delta = acts.back();
  LossAndGrads out;
  out.loss = log_softmax_nll(delta, rows, classes, batch.labels);
  // d(mean NLL)/d(logits) = (softmax - onehot) / rows
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < classes; ++c) {
      double& d = delta[r * classes + c];
      d = std::exp(d);
      if (static_cast<int>(c) == batch.labels[r]) d -= 1.0;
      d *= inv_rows;
    }
  }

  for (std::size_t k = num_layers(); k-- > 0;) {
    const std::size_t in = dims_[k];
    const std::size_t outd = dims_[k + 1];
    const std::vector<double>& x = acts[k];
    Tensor dw({in, outd});
    Tensor db({outd});
    for (std::size_t r = 0; r < rows; ++r) {
      const double* dr = &delta[r * outd];
      for (std::size_t j = 0; j < outd; ++j) db[j] += dr[j];
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = x[r * in + i];
        if (xi == 0.0) continue;
        double* dwi = &dw.data()[i * outd];
        for (std::size_t j = 0; j < outd; ++j) dwi[j] += xi * dr[j];
      }
    }
    if (k > 0) {
      const auto w = params.at(kernel_path(k)).data();
      std::vector<double> prev(rows * in, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* dr = &delta[r * outd];
        for (std::size_t i = 0; i < in; ++i) {
          if (x[r * in + i] <= 0.0) continue;  // ReLU gate
          const double* wi = &w[i * outd];
          double acc = 0.0;
          for (std::size_t j = 0; j < outd; ++j) acc += wi[j] * dr[j];
          prev[r * in + i] = acc;
        }
      }
      delta = std::move(prev);
    }
    out.grads.set(kernel_path(k), std::move(dw));
    out.grads.set(bias_path(k), std::move(db));
  }
  return out;
}

double Mlp::accuracy(const ParamTree& params, const Batch& batch) const {
  check_labels(batch, dims_.back());
  const Tensor logits = forward(params, batch);
  const std::size_t classes = dims_.back();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const double* row = &logits.data()[r * classes];
    const auto best = static_cast<int>(std::max_element(row, row + classes) - row);
    if (best == batch.labels[r]) ++correct;
  }
  return batch.rows == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(batch.rows);
}

}  // namespace sparsekit
