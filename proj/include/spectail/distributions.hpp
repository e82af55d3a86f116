#pragma once

// Special functions and samplers for the laws used by the models: Student t
// (cdf, survival, quantile), standard normal, standardized innovations,
// power-tilted innovations, standard Pareto and gamma.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "spectail/error.hpp"
#include "spectail/random.hpp"

namespace spectail {

namespace detail {

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite argument");
}

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b). The complement y = 1 - x is passed
/// separately so callers can keep full precision near x = 1.
inline double incomplete_beta(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete_beta: shape parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * detail::beta_continued_fraction(b, a, y) / b;
}

inline double incomplete_beta(double a, double b, double x) { return incomplete_beta(a, b, x, 1.0 - x); }

// ---------------------------------------------------------------------------
// Normal

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Normal quantile, Wichura's AS241 (about 16 significant digits).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

// ---------------------------------------------------------------------------
// Student t

inline double student_t_pdf(double nu, double x) {
  const double log_c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi);
  return std::exp(log_c - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

/// Survival function P{T > x} for T ~ t_nu, accurate far into the upper tail.
inline double student_t_sf(double nu, double x) {
  if (!(nu > 0.0)) throw DomainError("student_t_sf: nu must be positive");
  if (std::isnan(x)) throw DomainError("student_t_sf: non-finite argument");
  if (x == std::numeric_limits<double>::infinity()) return 0.0;
  if (x == -std::numeric_limits<double>::infinity()) return 1.0;
  const double x2 = x * x;
  double w, wc;
  if (x2 > 1e300) {
    w = nu / x2;
    wc = 1.0;
  } else {
    w = nu / (nu + x2);
    wc = x2 / (nu + x2);
  }
  const double tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, w, wc);
  return x >= 0.0 ? tail : 1.0 - tail;
}

inline double student_t_cdf(double nu, double x) {
  detail::require_finite(x, "student_t_cdf");
  return student_t_sf(nu, -x);
}

namespace detail {

// Upper quantile for q in (0, 1/2]: the x >= 0 with sf(x) = q.
inline double student_t_upper_quantile_core(double nu, double q) {
  if (q == 0.5) return 0.0;
  // Closed forms for small integer degrees of freedom.
  if (nu == 1.0) return 1.0 / std::tan(std::numbers::pi * q);
  if (nu == 2.0) return (1.0 - 2.0 * q) / std::sqrt(2.0 * q * (1.0 - q));
  if (nu == 4.0) {
    const double a = 4.0 * q * (1.0 - q);
    const double sa = std::sqrt(a);
    return 2.0 * std::sqrt(std::cos(std::acos(sa) / 3.0) / sa - 1.0);
  }
  // Newton on log sf as a function of log x, inside a bisection bracket.
  const double log_q = std::log(q);
  double lo = 0.0;
  double hi = std::max(1.0, -normal_quantile(q));
  while (student_t_sf(nu, hi) > q) {
    lo = hi;
    hi *= 4.0;
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  }
  double x = std::clamp(-normal_quantile(q), lo, hi);
  if (x <= 0.0) x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double sf = student_t_sf(nu, x);
    if (sf > q) lo = x; else hi = x;
    const double pdf = student_t_pdf(nu, x);
    double next;
    if (sf < 0.25) {
      // d log sf / d log x = -x pdf / sf
      const double slope = -x * pdf / sf;
      next = x * std::exp((log_q - std::log(sf)) / slope);
    } else {
      next = x + (sf - q) / pdf;
    }
    if (!(next > lo && next < hi)) next = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    const double step = std::fabs(next - x);
    x = next;
    if (step <= 1e-14 * x || step < 1e-13) break;
  }
  return x;
}

}  // namespace detail

/// The x with P{T > x} = q. Preferred over student_t_quantile(nu, 1 - q) for
/// small q.
inline double student_t_quantile_upper(double nu, double q) {
  if (!(nu > 0.0)) throw DomainError("student_t_quantile: nu must be positive");
  if (!(q > 0.0 && q < 1.0)) throw DomainError("student_t_quantile: probability must lie in (0,1)");
  if (q > 0.5) return -detail::student_t_upper_quantile_core(nu, 1.0 - q);
  return detail::student_t_upper_quantile_core(nu, q);
}

inline double student_t_quantile(double nu, double p) {
  if (!(nu > 0.0)) throw DomainError("student_t_quantile: nu must be positive");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("student_t_quantile: p must lie in (0,1)");
  if (p < 0.5) return -detail::student_t_upper_quantile_core(nu, p);
  return detail::student_t_upper_quantile_core(nu, 1.0 - p);
}

// ---------------------------------------------------------------------------
// Samplers

/// Marsaglia-Tsang; shapes below one are boosted by U^(1/shape).
inline double gamma_sample(double shape, double scale, Stream& stream) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw DomainError("gamma_sample: shape and scale must be positive");
  double boost = 1.0;
  double a = shape;
  if (a < 1.0) {
    boost = std::pow(stream.uniform_open(), 1.0 / a);
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = stream.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 || std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return d * v * boost * scale;
    }
  }
}

/// Raw (unit-scale) Student t draw.
inline double student_t_sample(double nu, Stream& stream) {
  const double z = stream.normal();
  const double chi2 = gamma_sample(0.5 * nu, 2.0, stream);
  return z / std::sqrt(chi2 / nu);
}

inline double standard_pareto_from_uniform(double alpha, double u) {
  if (!(alpha > 0.0)) throw DomainError("standard Pareto: alpha must be positive");
  return std::pow(u, -1.0 / alpha);
}

/// Standard Pareto(alpha): P{Y > x} = x^-alpha for x >= 1.
inline double sample_standard_pareto(double alpha, Stream& stream) {
  return standard_pareto_from_uniform(alpha, stream.uniform_open());
}

// ---------------------------------------------------------------------------
// Innovations

struct InnovationSpec {
  enum class Kind { StandardNormal, StandardizedT };

  Kind kind = Kind::StandardNormal;
  double nu = 0.0;  // degrees of freedom, StandardizedT only

  static InnovationSpec standard_normal() { return {}; }

  static InnovationSpec standardized_t(double nu) {
    if (!(nu > 2.0)) throw DomainError("standardized t innovations need nu > 2");
    return {Kind::StandardizedT, nu};
  }

  bool is_normal() const { return kind == Kind::StandardNormal; }

  // sqrt((nu - 2) / nu) for the t law, 1 otherwise.
  double t_scale() const { return is_normal() ? 1.0 : std::sqrt((nu - 2.0) / nu); }

  std::string describe() const {
    return is_normal() ? std::string("normal") : "student_t(" + std::to_string(nu) + ")";
  }
};

inline double sample_innovation(const InnovationSpec& spec, Stream& stream) {
  if (spec.is_normal()) return stream.normal();
  return student_t_sample(spec.nu, stream) * spec.t_scale();
}

inline double innovation_pdf(const InnovationSpec& spec, double x) {
  if (spec.is_normal()) return normal_pdf(x);
  const double s = spec.t_scale();
  return student_t_pdf(spec.nu, x / s) / s;
}

inline double innovation_cdf(const InnovationSpec& spec, double x) {
  if (spec.is_normal()) return normal_cdf(x);
  return student_t_cdf(spec.nu, x / spec.t_scale());
}

/// E|eps|^p; infinite when p >= nu for the t law.
inline double innovation_abs_moment(const InnovationSpec& spec, double p) {
  const double common = std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(std::numbers::pi);
  if (spec.is_normal()) return std::exp(0.5 * p * std::log(2.0) + common);
  if (p >= spec.nu) return std::numeric_limits<double>::infinity();
  const double nu = spec.nu;
  return std::exp(p * std::log(spec.t_scale()) + 0.5 * p * std::log(nu) + common + std::lgamma(0.5 * (nu - p)) -
                  std::lgamma(0.5 * nu));
}

struct TiltedInnovationSpec {
  InnovationSpec base;
  double alpha = 0.0;
};

/// Density h(x) = g(x) |x|^alpha / E|eps|^alpha of the tilted innovation.
inline double tilted_innovation_pdf(const TiltedInnovationSpec& spec, double x) {
  return innovation_pdf(spec.base, x) * std::pow(std::fabs(x), spec.alpha) /
         innovation_abs_moment(spec.base, spec.alpha);
}

/// Draw from the tilted density h. Normal base: eps^2 ~ Gamma((alpha+1)/2, 2).
/// t base: eps^2 / (scale^2 nu) is a ratio of independent gammas with shapes
/// (1+alpha)/2 and (nu-alpha)/2. The sign is symmetric in both cases.
inline double sample_tilted_innovation(const TiltedInnovationSpec& spec, Stream& stream) {
  if (!(spec.alpha > 0.0)) throw DomainError("tilted innovation: alpha must be positive");
  const double sign = stream.sign();
  if (spec.base.is_normal()) return sign * std::sqrt(gamma_sample(0.5 * (spec.alpha + 1.0), 2.0, stream));
  const double nu = spec.base.nu;
  if (spec.alpha >= nu) throw DomainError("tilted innovation: E|eps|^alpha is infinite (alpha >= nu)");
  const double g1 = gamma_sample(0.5 * (1.0 + spec.alpha), 1.0, stream);
  const double g2 = gamma_sample(0.5 * (nu - spec.alpha), 1.0, stream);
  return sign * spec.base.t_scale() * std::sqrt(nu * g1 / g2);
}

}  // namespace spectail
