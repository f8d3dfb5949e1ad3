#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparsekit/errors.hpp"

namespace sparsekit {

using Shape = std::vector<std::size_t>;

/// Number of elements described by a shape.
std::size_t num_elements(const Shape& shape);

std::string shape_to_string(const Shape& shape);

/// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() : Tensor(Shape{0}) {}

  /// Zero-filled tensor. Throws ArgumentError for an empty shape.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  /// 1-D tensor from a list of values.
  static Tensor vector(std::initializer_list<double> values);
  static Tensor filled(Shape shape, double value);

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Named collection of tensors iterated in lexicographic path order.
class ParamTree {
 public:
  using Map = std::map<std::string, Tensor>;
  using const_iterator = Map::const_iterator;
  using iterator = Map::iterator;

  ParamTree() = default;
  ParamTree(std::initializer_list<std::pair<const std::string, Tensor>> entries);

  /// Inserts or replaces the tensor at `path`. Empty paths are rejected.
  void set(const std::string& path, Tensor tensor);

  [[nodiscard]] const Tensor& at(const std::string& path) const;
  [[nodiscard]] Tensor& at(const std::string& path);
  [[nodiscard]] bool contains(const std::string& path) const { return entries_.contains(path); }

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] std::vector<std::string> paths() const;
  /// Sum of element counts over all entries.
  [[nodiscard]] std::size_t total_elements() const;

  const_iterator begin() const { return entries_.begin(); }
  const_iterator end() const { return entries_.end(); }
  iterator begin() { return entries_.begin(); }
  iterator end() { return entries_.end(); }

  friend bool operator==(const ParamTree&, const ParamTree&) = default;

 private:
  Map entries_;
};

/// Throws StructuralError naming the first divergent path if `a` and `b`
/// differ in paths or per-path shapes.
void check_same_topology(const ParamTree& a, const ParamTree& b);

/// Tree of zeros with the topology of `like`.
ParamTree zeros_like(const ParamTree& like);

/// Applies an elementwise scalar function across one or more trees of
/// identical topology: out[path][i] = f(trees[path][i]...).
template <typename F, typename... Rest>
ParamTree tree_map(F&& f, const ParamTree& first, const Rest&... rest) {
  (check_same_topology(first, rest), ...);
  ParamTree out;
  for (const auto& [path, tensor] : first) {
    Tensor result(tensor.shape());
    const std::size_t n = tensor.size();
    for (std::size_t i = 0; i < n; ++i) {
      result[i] = f(tensor[i], rest.at(path)[i]...);
    }
    out.set(path, std::move(result));
  }
  return out;
}

/// Indices of the k largest scores, sorted ascending. Ties go to the lower
/// index. Throws ArgumentError if k > scores.size() or a score is NaN.
std::vector<std::size_t> topk_indices(std::span<const double> scores, std::size_t k);

double l2_norm(const Tensor& t);

}  // namespace sparsekit
