#pragma once

// Multiplier block bootstrap for the forward, backward and Hill estimators.
//
// The core window 1..n is cut into m = floor(n/r) blocks of length r (a
// trailing partial block is dropped) and every block's contribution to the
// numerator and denominator sums is reweighted by (1 + xi_j).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spectail/error.hpp"
#include "spectail/estimators.hpp"
#include "spectail/random.hpp"
#include "spectail/series.hpp"
#include "spectail/stats.hpp"

namespace spectail {

struct MultiplierSpec {
  enum class Law { Rademacher, UniformSymmetric, Zero };  // Zero: xi = 0, for tests

  Law law = Law::Rademacher;
  std::int64_t replicates = 1000;
  std::optional<std::int64_t> block_length;  // default ceil(k^0.4)

  void validate() const {
    if (replicates < 1) throw DomainError("bootstrap: need at least one replicate");
    if (block_length && *block_length < 1) throw DomainError("bootstrap: block length must be >= 1");
  }
};

inline double draw_multiplier(MultiplierSpec::Law law, Stream& stream) {
  switch (law) {
    case MultiplierSpec::Law::Rademacher: return stream.sign();
    case MultiplierSpec::Law::UniformSymmetric: return std::sqrt(3.0) * (2.0 * stream.uniform() - 1.0);
    case MultiplierSpec::Law::Zero: return 0.0;
  }
  return 0.0;
}

inline std::int64_t default_block_length(std::int64_t exceedances) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(exceedances), 0.4))));
}

/// Point estimate plus the per-exceedance quantities needed to reweight it.
class MultiplierEstimator {
 public:
  MultiplierEstimator(const TimeSeries& series, EstimatorKind kind, std::int64_t t, double x, ExceedanceSet exc,
                      std::int64_t block_length, std::optional<double> fixed_alpha = std::nullopt)
      : series_(&series), kind_(kind), t_(t), x_(x), exc_(std::move(exc)), r_(block_length), fixed_alpha_(fixed_alpha) {
    detail::require_exceedances(exc_);
    if (kind_ != EstimatorKind::Hill) detail::require_lag(series, t);
    const std::int64_t n = series.n();
    if (r_ < 1 || r_ > n) throw DomainError("bootstrap: block length must lie in [1, n]");
    blocks_ = n / r_;
    point_ = estimate(kind_, series, t_, x_, exc_, fixed_alpha_);
  }

  const EstimateRecord& point() const { return point_; }
  std::int64_t blocks() const { return blocks_; }
  std::int64_t block_length() const { return r_; }

  /// Replicate of the reported quantity (cdf, or alpha for Hill) for the given
  /// block weights 1 + xi_j. Returns nothing when a weighted denominator
  /// vanishes.
  std::optional<double> replicate_with_weights(std::span<const double> weights) const {
    if (static_cast<std::int64_t>(weights.size()) != blocks_) throw DomainError("bootstrap: one weight per block");
    const TimeSeries& s = *series_;
    const double u = exc_.threshold_value;
    auto weight_of = [&](std::int64_t i) {
      const std::int64_t j = (i - 1) / r_;
      return j < blocks_ ? weights[static_cast<std::size_t>(j)] : 0.0;
    };
    double den = 0.0;
    double log_sum = 0.0;
    double num = 0.0;
    const bool need_alpha = kind_ == EstimatorKind::Hill || (kind_ == EstimatorKind::Backward && !fixed_alpha_);
    for (std::int64_t i : exc_.indices) {
      const double w = weight_of(i);
      den += w * 1.0;
      if (need_alpha) log_sum += w * std::log(std::fabs(s[i]) / u);
      if (kind_ == EstimatorKind::Forward && s[i + t_] / std::fabs(s[i]) > x_) num += w * 1.0;
    }
    if (den == 0.0) return std::nullopt;
    if (kind_ == EstimatorKind::Forward) return 1.0 - num / den;
    double alpha = fixed_alpha_ ? *fixed_alpha_ : 0.0;
    if (need_alpha) {
      if (!(log_sum > 0.0)) return std::nullopt;
      alpha = den / log_sum;
      if (kind_ == EstimatorKind::Hill) return alpha;
    }
    for (std::int64_t i : exc_.indices) {
      const double back = s[i - t_];
      if (back == 0.0) continue;
      const double ratio = s[i] / std::fabs(back);
      const bool hit = x_ >= 0.0 ? ratio > x_ : ratio <= x_;
      if (hit) num += weight_of(i) * std::pow(std::fabs(back / s[i]), alpha);
    }
    return x_ >= 0.0 ? 1.0 - num / den : num / den;
  }

  std::optional<double> replicate(MultiplierSpec::Law law, Stream& stream) const {
    std::vector<double> w(static_cast<std::size_t>(blocks_));
    for (double& v : w) v = 1.0 + draw_multiplier(law, stream);
    return replicate_with_weights(w);
  }

  /// The value comparable with replicates: cdf for forward/backward, alpha for Hill.
  double point_value() const { return point_.estimate; }

 private:
  const TimeSeries* series_;
  EstimatorKind kind_;
  std::int64_t t_;
  double x_;
  ExceedanceSet exc_;
  std::int64_t r_;
  std::int64_t blocks_ = 0;
  std::optional<double> fixed_alpha_;
  EstimateRecord point_;
};

/// One bootstrap replicate; nothing if it is degenerate.
inline std::optional<double> multiplier_replicate(const TimeSeries& series, EstimatorKind kind, std::int64_t t,
                                                  double x, const ExceedanceSet& exc, const MultiplierSpec& mult,
                                                  Stream& stream) {
  mult.validate();
  const std::int64_t r = mult.block_length ? *mult.block_length : default_block_length(exc.count());
  return MultiplierEstimator(series, kind, t, x, exc, r).replicate(mult.law, stream);
}

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;

  bool contains(double v) const { return lower <= v && v <= upper; }
};

struct BootstrapResult {
  EstimateRecord point;
  std::vector<double> replicates;
  ConfidenceInterval ci;
  std::int64_t degenerate_count = 0;
  std::int64_t block_length = 0;
};

/// Basic interval: point - q_{(1+level)/2}, point - q_{(1-level)/2} of the
/// replicate-minus-point differences. The interval is for the cdf value (alpha
/// for Hill); see BootstrapResult::point for the record.
inline BootstrapResult bootstrap_ci(const TimeSeries& series, EstimatorKind kind, std::int64_t t, double x,
                                    const ThresholdSpec& threshold, const MultiplierSpec& mult, double level,
                                    Stream& stream) {
  mult.validate();
  if (!(level > 0.0 && level < 1.0)) throw DomainError("bootstrap: level must lie in (0,1)");
  ExceedanceSet exc = resolve_threshold(series, threshold);
  detail::require_exceedances(exc);
  const std::int64_t r = mult.block_length ? *mult.block_length : default_block_length(exc.count());
  MultiplierEstimator est(series, kind, t, x, std::move(exc), r);
  BootstrapResult out{est.point(), {}, {}, 0, r};
  out.replicates.reserve(static_cast<std::size_t>(mult.replicates));
  for (std::int64_t b = 0; b < mult.replicates; ++b) {
    if (auto v = est.replicate(mult.law, stream)) out.replicates.push_back(*v);
    else ++out.degenerate_count;
  }
  if (out.degenerate_count * 5 > mult.replicates)
    throw UnreliableIntervalError("bootstrap: more than 20% of the replicates are degenerate");
  const double point = est.point_value();
  std::vector<double> diff(out.replicates.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = out.replicates[i] - point;
  std::sort(diff.begin(), diff.end());
  out.ci.level = level;
  out.ci.lower = point - stats::quantile_sorted(diff, 0.5 * (1.0 + level));
  out.ci.upper = point - stats::quantile_sorted(diff, 0.5 * (1.0 - level));
  return out;
}

}  // namespace spectail
