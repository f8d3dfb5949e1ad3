#include "sparsekit/rng.hpp"

#include <cmath>
#include <numbers>

namespace sparsekit {
namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngKey derive_key(const RngKey& key, std::string_view label) {
  return derive_key(key, fnv1a(label));
}

RngKey derive_key(const RngKey& key, std::uint64_t label) {
  const std::uint64_t a = mix64(key.seed ^ mix64(key.stream + 0x632be59bd9b4e019ULL));
  const std::uint64_t b = mix64(a ^ mix64(label));
  return RngKey{key.seed, b};
}

std::uint64_t random_bits(const RngKey& key, std::uint64_t counter) {
  return mix64(mix64(key.seed ^ key.stream) + mix64(counter ^ 0xd1b54a32d192ed03ULL));
}

double uniform_at(const RngKey& key, std::uint64_t counter) {
  return static_cast<double>(random_bits(key, counter) >> 11) * 0x1.0p-53;
}

std::vector<double> uniform_samples(const RngKey& key, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = uniform_at(key, i);
  return out;
}

double RngStream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = random_bits(key_, counter_++);
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = -n % n;
    while (low < threshold) {
      x = random_bits(key_, counter_++);
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace sparsekit
