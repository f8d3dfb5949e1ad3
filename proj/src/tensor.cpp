#include "sparsekit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sparsekit {

std::size_t num_elements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw ArgumentError("tensor shape must have at least one dimension");
  data_.assign(num_elements(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw ArgumentError("tensor shape must have at least one dimension");
  if (data_.size() != num_elements(shape_)) {
    throw ArgumentError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

ParamTree::ParamTree(std::initializer_list<std::pair<const std::string, Tensor>> entries) {
  for (const auto& [path, tensor] : entries) set(path, tensor);
}

void ParamTree::set(const std::string& path, Tensor tensor) {
  if (path.empty()) throw ArgumentError("parameter paths must be non-empty");
  entries_.insert_or_assign(path, std::move(tensor));
}

const Tensor& ParamTree::at(const std::string& path) const {
  auto it = entries_.find(path);
  if (it == entries_.end()) throw StructuralError("no parameter at path '" + path + "'");
  return it->second;
}

Tensor& ParamTree::at(const std::string& path) {
  auto it = entries_.find(path);
  if (it == entries_.end()) throw StructuralError("no parameter at path '" + path + "'");
  return it->second;
}

std::vector<std::string> ParamTree::paths() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [path, _] : entries_) out.push_back(path);
  return out;
}

std::size_t ParamTree::total_elements() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

void check_same_topology(const ParamTree& a, const ParamTree& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first != ib->first) {
      throw StructuralError("tree topology mismatch at path '" + std::min(ia->first, ib->first) + "'");
    }
    if (ia->second.shape() != ib->second.shape()) {
      throw StructuralError("tree topology mismatch at path '" + ia->first + "': shape " +
                            shape_to_string(ia->second.shape()) + " vs " +
                            shape_to_string(ib->second.shape()));
    }
    ++ia;
    ++ib;
  }
  if (ia != a.end()) throw StructuralError("tree topology mismatch at path '" + ia->first + "'");
  if (ib != b.end()) throw StructuralError("tree topology mismatch at path '" + ib->first + "'");
}

ParamTree zeros_like(const ParamTree& like) {
  ParamTree out;
  for (const auto& [path, t] : like) out.set(path, Tensor(t.shape()));
  return out;
}

std::vector<std::size_t> topk_indices(std::span<const double> scores, std::size_t k) {
  if (k > scores.size()) {
    throw ArgumentError("top-k count " + std::to_string(k) + " exceeds " +
                        std::to_string(scores.size()) + " scores");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw ArgumentError("NaN score passed to top-k selection");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Strict total order: larger score first, then lower index.
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  if (k < order.size()) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

double l2_norm(const Tensor& t) {
  double sum = 0.0;
  for (double v : t.data()) sum += v * v;
  return std::sqrt(sum);
}

}  // namespace sparsekit
