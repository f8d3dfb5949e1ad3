#include "sparsekit/dataset.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace sparsekit {

void DatasetSpec::validate() const {
  if (generator != "gaussian_blobs" && generator != "two_spirals") {
    throw ConfigError("unknown dataset generator '" + generator + "'");
  }
  if (n_samples == 0) throw ConfigError("dataset needs n_samples > 0");
  if (n_features < 2) throw ConfigError("dataset needs at least 2 features");
  if (n_classes < 2) throw ConfigError("dataset needs at least 2 classes");
  if (!(noise >= 0.0)) throw ConfigError("dataset noise must be non-negative");
  if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) throw ConfigError("eval_fraction must lie in [0, 1)");
}

Batch generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Batch out;
  out.rows = spec.n_samples;
  out.cols = spec.n_features;
  out.features.assign(out.rows * out.cols, 0.0);
  out.labels.resize(out.rows);

  RngStream rng(derive_key(RngKey{spec.seed, 0}, spec.generator));
  const double k = static_cast<double>(spec.n_classes);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const auto label = static_cast<int>(i % spec.n_classes);
    out.labels[i] = label;
    double* x = &out.features[i * out.cols];
    const double phase = 2.0 * std::numbers::pi * label / k;
    if (spec.generator == "gaussian_blobs") {
      x[0] = 2.0 * std::cos(phase);
      x[1] = 2.0 * std::sin(phase);
    } else {
      // Each class is one arm of a spiral winding 1.5 turns outwards.
      const double t = 0.05 + 0.95 * rng.uniform();
      const double angle = 3.0 * std::numbers::pi * t + phase;
      x[0] = 2.0 * t * std::cos(angle);
      x[1] = 2.0 * t * std::sin(angle);
    }
    for (std::size_t f = 0; f < out.cols; ++f) x[f] += spec.noise * rng.normal();
  }
  return out;
}

Batch gather_rows(const Batch& data, const std::vector<std::size_t>& indices) {
  Batch out;
  out.rows = indices.size();
  out.cols = data.cols;
  out.features.resize(out.rows * out.cols);
  out.labels.resize(out.rows);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t src = indices[r];
    std::copy_n(&data.features[src * data.cols], data.cols, &out.features[r * out.cols]);
    out.labels[r] = data.labels[src];
  }
  return out;
}

DataSplit split_dataset(const Batch& data, double eval_fraction) {
  const auto n_eval = static_cast<std::size_t>(std::floor(eval_fraction * static_cast<double>(data.rows)));
  std::vector<std::size_t> train(data.rows - n_eval);
  std::vector<std::size_t> eval(n_eval);
  std::iota(train.begin(), train.end(), std::size_t{0});
  std::iota(eval.begin(), eval.end(), train.size());
  return DataSplit{gather_rows(data, train), gather_rows(data, eval)};
}

}  // namespace sparsekit
