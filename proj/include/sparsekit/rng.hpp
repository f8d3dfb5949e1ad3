#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace sparsekit {

/// Counter-based splittable key. Children are derived by hashing a label
/// into the parent; draws are a pure function of (key, counter).
struct RngKey {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const RngKey&, const RngKey&) = default;
};

RngKey derive_key(const RngKey& key, std::string_view label);
RngKey derive_key(const RngKey& key, std::uint64_t label);

/// Raw 64 random bits at position `counter` of the key's stream.
std::uint64_t random_bits(const RngKey& key, std::uint64_t counter);

/// Uniform double in [0, 1) at position `counter`, 53-bit resolution.
double uniform_at(const RngKey& key, std::uint64_t counter);

/// First n uniform [0, 1) draws of the key's stream.
std::vector<double> uniform_samples(const RngKey& key, std::size_t n);

/// Sequential reader over a key's stream, for code that consumes a variable
/// number of draws (data generation, weight init).
class RngStream {
 public:
  explicit RngStream(RngKey key) : key_(key) {}

  double uniform() { return uniform_at(key_, counter_++); }
  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  RngKey key_;
  std::uint64_t counter_ = 0;
};

}  // namespace sparsekit
