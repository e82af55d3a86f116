#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spectail/error.hpp"
#include "spectail/random.hpp"

namespace spectail {

struct SeriesRequest {
  std::int64_t n = 0;        // core length
  std::int64_t max_lag = 1;  // padding on each side
  std::int64_t burn_in = 1000;
};

/// A realized path X_{1-L}, ..., X_{n+L} where L is the maximal lag. Index 1
/// is the first core observation.
class TimeSeries {
 public:
  TimeSeries() = default;

  TimeSeries(std::vector<double> values, std::int64_t max_lag, std::string model_tag = {}, std::uint64_t seed = 0)
      : values_(std::move(values)), max_lag_(max_lag), model_tag_(std::move(model_tag)), seed_(seed) {
    if (max_lag_ < 0 || static_cast<std::int64_t>(values_.size()) < 2 * max_lag_ + 1)
      throw DomainError("TimeSeries: length must exceed twice the padding");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) throw DomainError("TimeSeries: non-finite value");
    }
  }

  /// Build from a core sample without padding (lags then cannot reach past
  /// the ends).
  static TimeSeries from_core(std::vector<double> core) { return TimeSeries(std::move(core), 0); }

  std::int64_t n() const { return static_cast<std::int64_t>(values_.size()) - 2 * max_lag_; }
  std::int64_t max_lag() const { return max_lag_; }
  std::int64_t first_index() const { return 1 - max_lag_; }
  std::int64_t last_index() const { return n() + max_lag_; }

  double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i - 1 + max_lag_)]; }

  double at(std::int64_t i) const {
    if (i < first_index() || i > last_index()) throw DomainError("TimeSeries: index out of range");
    return (*this)[i];
  }

  std::span<const double> core() const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(max_lag_), static_cast<std::size_t>(n()));
  }
  std::span<const double> all() const { return values_; }

  const std::string& model_tag() const { return model_tag_; }
  std::uint64_t seed() const { return seed_; }

  /// Scaled copy, used by invariance tests.
  TimeSeries scaled(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return TimeSeries(std::move(v), max_lag_, model_tag_, seed_);
  }

  /// FNV-1a over the raw bytes of the values; identifies the exact path.
  std::uint64_t checksum() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (double x : values_) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &x, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
      }
    }
    return h;
  }

 private:
  std::vector<double> values_;
  std::int64_t max_lag_ = 0;
  std::string model_tag_;
  std::uint64_t seed_ = 0;
};

}  // namespace spectail
