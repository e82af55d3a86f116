#pragma once

// Reproducible random streams.
//
// Every Monte Carlo task owns its own Stream. Streams are derived from a
// master seed and a list of labels through a 64-bit mixing permutation, so
// replicate r of model m always sees the same numbers no matter how many
// threads run or in which order tasks complete.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace spectail {

// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  // Standard normal by the Marsaglia polar method; the second variate of each
  // pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Random sign, +1 or -1 with probability 1/2.
  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

using SeedLabel = std::variant<std::uint64_t, std::string>;

inline std::uint64_t label_hash(const SeedLabel& label) {
  if (const auto* v = std::get_if<std::uint64_t>(&label)) return mix64(*v ^ 0x5851F42D4C957F2DULL);
  return mix64(fnv1a64(std::get<std::string>(label)) ^ 0x14057B7EF767814FULL);
}

// Folds labels into the master seed. With no labels the result is
// mix64(master).
inline std::uint64_t mix_seed(std::uint64_t master, std::span<const SeedLabel> labels) {
  std::uint64_t h = mix64(master);
  for (const auto& l : labels) h = mix64(h ^ label_hash(l));
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<SeedLabel> labels) {
  return mix_seed(master, std::span<const SeedLabel>(labels.begin(), labels.size()));
}

inline Stream derive_seed(std::uint64_t master, std::span<const SeedLabel> labels) {
  return Stream(mix_seed(master, labels));
}

inline Stream derive_seed(std::uint64_t master, std::initializer_list<SeedLabel> labels = {}) {
  return Stream(mix_seed(master, labels));
}

// stream(i) = mix(master, i); the common case of a single integer label.
inline Stream derive_stream(std::uint64_t master, std::uint64_t i) {
  return Stream(mix_seed(master, {SeedLabel{i}}));
}

}  // namespace spectail
