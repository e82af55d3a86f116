#pragma once

// Forward, backward and Hill-type estimators over threshold exceedances, and
// the tail array sums they are built from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spectail/error.hpp"
#include "spectail/series.hpp"

namespace spectail {

// ---------------------------------------------------------------------------
// Thresholds

struct Deterministic {
  double u = 0.0;
};

/// Threshold at the (n-k)-th ascending order statistic of |X_1|, ..., |X_n|.
struct OrderStatistic {
  std::int64_t k = 0;
};

/// Quantile F^{-1}(beta) of |X_0|, resolved beforehand (analytic or cached
/// Monte Carlo value).
struct QuantileLevel {
  double beta = 0.0;
  std::optional<double> value;
};

using ThresholdSpec = std::variant<Deterministic, OrderStatistic, QuantileLevel>;

inline std::string threshold_mode_name(const ThresholdSpec& spec) {
  if (std::holds_alternative<OrderStatistic>(spec)) return "OS";
  if (std::holds_alternative<QuantileLevel>(spec)) return "TQ";
  return "fixed";
}

struct ExceedanceSet {
  ThresholdSpec spec;
  double threshold_value = 0.0;
  std::vector<std::int64_t> indices;  // 1-based, ascending

  std::int64_t count() const { return static_cast<std::int64_t>(indices.size()); }
  bool empty() const { return indices.empty(); }
};

namespace detail {

inline ExceedanceSet exceedances_over(const TimeSeries& series, double u, ThresholdSpec spec) {
  ExceedanceSet exc{std::move(spec), u, {}};
  const std::int64_t n = series.n();
  for (std::int64_t i = 1; i <= n; ++i) {
    if (std::fabs(series[i]) > u) exc.indices.push_back(i);
  }
  return exc;
}

}  // namespace detail

/// The (n-k)-th smallest of |X_1|, ..., |X_n|.
inline double order_statistic_threshold(const TimeSeries& series, std::int64_t k) {
  const std::int64_t n = series.n();
  if (k < 1 || k >= n) throw DomainError("order statistic threshold: need 1 <= k < n");
  std::vector<double> a(static_cast<std::size_t>(n));
  const auto core = series.core();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::fabs(core[i]);
  const auto pos = a.begin() + (n - k - 1);
  std::nth_element(a.begin(), pos, a.end());
  return *pos;
}

/// Strict exceedances |X_i| > threshold over the core window 1..n. An empty
/// set is returned as is; the estimators reject it.
inline ExceedanceSet resolve_threshold(const TimeSeries& series, const ThresholdSpec& spec) {
  return std::visit(
      [&](const auto& s) -> ExceedanceSet {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Deterministic>) {
          if (!(s.u > 0.0)) throw DomainError("deterministic threshold must be positive");
          return detail::exceedances_over(series, s.u, spec);
        } else if constexpr (std::is_same_v<T, OrderStatistic>) {
          return detail::exceedances_over(series, order_statistic_threshold(series, s.k), spec);
        } else {
          if (!(s.beta > 0.0 && s.beta < 1.0)) throw DomainError("quantile level must lie in (0,1)");
          if (!s.value) throw DomainError("quantile threshold has not been resolved");
          if (!(*s.value > 0.0)) throw DomainError("quantile threshold must be positive");
          return detail::exceedances_over(series, *s.value, spec);
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// Estimators

enum class EstimatorKind { Forward, Backward, Hill };

inline std::string kind_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Forward: return "forward";
    case EstimatorKind::Backward: return "backward";
    case EstimatorKind::Hill: return "hill";
  }
  return "?";
}

inline EstimatorKind parse_kind(const std::string& s) {
  if (s == "forward") return EstimatorKind::Forward;
  if (s == "backward") return EstimatorKind::Backward;
  if (s == "hill") return EstimatorKind::Hill;
  throw DomainError("unknown estimator kind '" + s + "'");
}

struct EstimateRecord {
  EstimatorKind kind = EstimatorKind::Forward;
  std::int64_t lag = 0;
  double x = 0.0;
  ThresholdSpec threshold;
  double threshold_value = 0.0;
  double estimate = 0.0;  // cdf value for forward/backward, alpha for Hill
  std::int64_t exceedance_count = 0;
  std::optional<double> alpha_hat;

  /// Estimated P{Theta_t > x} for forward/backward records.
  double survival() const { return 1.0 - estimate; }
};

namespace detail {

inline void require_exceedances(const ExceedanceSet& exc) {
  if (exc.empty()) throw NoExceedancesError();
}

inline void require_lag(const TimeSeries& series, std::int64_t t) {
  if (t == 0) throw DomainError("lag must be nonzero");
  if (std::llabs(t) > series.max_lag()) throw DomainError("lag exceeds the series padding");
}

}  // namespace detail

/// alpha-hat = count / sum log(|X_i| / u) over the exceedances.
inline double hill_alpha(const TimeSeries& series, const ExceedanceSet& exc) {
  detail::require_exceedances(exc);
  const double u = exc.threshold_value;
  if (!(u > 0.0)) throw DomainError("Hill estimator needs a positive threshold");
  double sum = 0.0;
  for (std::int64_t i : exc.indices) sum += std::log(std::fabs(series[i]) / u);
  return static_cast<double>(exc.count()) / sum;
}

inline EstimateRecord hill_record(const TimeSeries& series, const ExceedanceSet& exc) {
  const double a = hill_alpha(series, exc);
  return {EstimatorKind::Hill, 0, 0.0, exc.spec, exc.threshold_value, a, exc.count(), a};
}

/// Empirical cdf of X_{i+t}/|X_i| over the exceedances, computed as
/// 1 - #{ratio > x}/count so that it coincides with the tail array sum form.
inline EstimateRecord forward_cdf(const TimeSeries& series, std::int64_t t, double x, const ExceedanceSet& exc) {
  detail::require_exceedances(exc);
  detail::require_lag(series, t);
  std::int64_t above = 0;
  for (std::int64_t i : exc.indices) {
    if (series[i + t] / std::fabs(series[i]) > x) ++above;
  }
  const double count = static_cast<double>(exc.count());
  return {EstimatorKind::Forward, t, x, exc.spec, exc.threshold_value, 1.0 - static_cast<double>(above) / count,
          exc.count(), std::nullopt};
}

namespace detail {

// Sum over exceedances of |X_{i-t}/X_i|^alpha on the branch selected by x.
inline double backward_mass(const TimeSeries& series, std::int64_t t, double x, const ExceedanceSet& exc,
                            double alpha) {
  double sum = 0.0;
  for (std::int64_t i : exc.indices) {
    const double back = series[i - t];
    if (back == 0.0) continue;
    const double xi = series[i];
    const double fwd_ratio = xi / std::fabs(back);
    const bool hit = x >= 0.0 ? fwd_ratio > x : fwd_ratio <= x;
    if (hit) sum += std::pow(std::fabs(back / xi), alpha);
  }
  return sum;
}

}  // namespace detail

/// Time-change based estimator. alpha defaults to the Hill estimate on the same
/// exceedances. The value is not clipped to [0, 1].
inline EstimateRecord backward_cdf(const TimeSeries& series, std::int64_t t, double x, const ExceedanceSet& exc,
                                   std::optional<double> alpha = std::nullopt) {
  detail::require_exceedances(exc);
  detail::require_lag(series, t);
  const double a = alpha ? *alpha : hill_alpha(series, exc);
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("backward estimator needs a positive finite alpha");
  const double mass = detail::backward_mass(series, t, x, exc, a) / static_cast<double>(exc.count());
  const double cdf = x >= 0.0 ? 1.0 - mass : mass;
  return {EstimatorKind::Backward, t, x, exc.spec, exc.threshold_value, cdf, exc.count(), a};
}

inline EstimateRecord estimate(EstimatorKind kind, const TimeSeries& series, std::int64_t t, double x,
                               const ExceedanceSet& exc, std::optional<double> alpha = std::nullopt) {
  switch (kind) {
    case EstimatorKind::Forward: return forward_cdf(series, t, x, exc);
    case EstimatorKind::Backward: return backward_cdf(series, t, x, exc, alpha);
    case EstimatorKind::Hill: return hill_record(series, exc);
  }
  throw DomainError("unknown estimator kind");
}

// ---------------------------------------------------------------------------
// Tail array sums

/// One of the functions phi_0, phi_1, phi_2, phi_3 applied to the normalized
/// window u^{-1}(X_{i-L}, ..., X_{i+L}). Coordinates enter in absolute value
/// except for the numerator of the forward ratio and the sign of X_i in the
/// backward indicator.
struct PhiSpec {
  enum class Family { Phi0, Phi1, Phi2, Phi3 };

  Family family = Family::Phi1;
  double s = 1.0;
  std::int64_t t = 0;   // Phi2, Phi3
  double x = 0.0;       // Phi2 argument, Phi3 argument y
  double alpha = 0.0;   // Phi3
  double epsilon = 0.1;

  static PhiSpec phi0(double s = 1.0) { return {Family::Phi0, s}; }
  static PhiSpec phi1(double s = 1.0) { return {Family::Phi1, s}; }
  static PhiSpec phi2(std::int64_t t, double x, double s = 1.0) { return {Family::Phi2, s, t, x}; }
  static PhiSpec phi3(std::int64_t t, double y, double alpha, double s = 1.0) {
    return {Family::Phi3, s, t, y, alpha};
  }

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("phi: epsilon must lie in (0,1)");
    if (!(s >= 1.0 - epsilon && s <= 1.0 + epsilon)) throw DomainError("phi: s outside [1-eps, 1+eps]");
    if ((family == Family::Phi2 || family == Family::Phi3) && t == 0) throw DomainError("phi: lag must be nonzero");
    if (family == Family::Phi3 && (!(x > 0.0) || !(alpha > 0.0)))
      throw DomainError("phi3: y and alpha must be positive");
  }
};

/// psi evaluated at the window centred at index i, for threshold u.
inline double phi_value(const TimeSeries& series, const PhiSpec& phi, double u, std::int64_t i) {
  const double level = phi.s * u;
  const double x0 = std::fabs(series[i]);
  if (!(x0 > level)) return 0.0;
  switch (phi.family) {
    case PhiSpec::Family::Phi0: return std::log(x0 / level);
    case PhiSpec::Family::Phi1: return 1.0;
    case PhiSpec::Family::Phi2: return series[i + phi.t] / x0 > phi.x ? 1.0 : 0.0;
    case PhiSpec::Family::Phi3: {
      const double back = series[i - phi.t];
      if (back == 0.0) return 0.0;
      if (!(series[i] / std::fabs(back) > phi.x)) return 0.0;
      return std::pow(std::fabs(back / series[i]), phi.alpha);
    }
  }
  return 0.0;
}

/// sum_{i=1}^n psi(X_{n,i}) for the selected function.
inline double tail_array_sum(const TimeSeries& series, const PhiSpec& phi, double u) {
  phi.validate();
  if (!(u > 0.0)) throw DomainError("tail array sum: u must be positive");
  if (phi.family == PhiSpec::Family::Phi2 || phi.family == PhiSpec::Family::Phi3) detail::require_lag(series, phi.t);
  double sum = 0.0;
  const std::int64_t n = series.n();
  for (std::int64_t i = 1; i <= n; ++i) sum += phi_value(series, phi, u, i);
  return sum;
}

}  // namespace spectail
