#pragma once

// Numerical checks of the limit theory: covariances of the limiting Gaussian
// process, the cluster moment bound, drift and decay diagnostics for
// stochastic recurrence equations, consistency of the order statistic
// threshold, and normality of the standardized estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spectail/distributions.hpp"
#include "spectail/error.hpp"
#include "spectail/estimators.hpp"
#include "spectail/models.hpp"
#include "spectail/parallel.hpp"
#include "spectail/random.hpp"
#include "spectail/stats.hpp"
#include "spectail/truth.hpp"

namespace spectail {

// ---------------------------------------------------------------------------
// Reports

enum class Verdict { Bounded, Growing, Inconclusive, Violated };

inline std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Bounded: return "bounded";
    case Verdict::Growing: return "growing";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::Violated: return "violated";
  }
  return "?";
}

struct ConditionReport {
  std::string name;
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> std_errors;
  Verdict verdict = Verdict::Inconclusive;
  double exponent = std::numeric_limits<double>::quiet_NaN();  // fitted growth exponent / decay rate
  std::string rule;
};

// ---------------------------------------------------------------------------
// Tail process sampler

/// Forward spectral tail process (Theta_0, ..., Theta_K) together with the
/// tail index; Y_k = Y_0 Theta_k with Y_0 standard Pareto(alpha) independent
/// of the chain.
struct TailProcessSampler {
  double alpha = 1.0;
  std::int64_t K = 50;
  std::function<void(Stream&, std::span<double>)> chain;  // fills K + 1 values

  void draw(Stream& s, std::span<double> theta) const {
    if (static_cast<std::int64_t>(theta.size()) != K + 1) throw DomainError("tail chain: buffer must hold K + 1 values");
    chain(s, theta);
  }
};

/// Theta_0 = +-1, Theta_k = Theta_{k-1} (rho + c T_k), T_k iid t_{nu+1}.
inline TailProcessSampler tcopula_tail_chain(double nu, double rho, std::int64_t K) {
  const double c = std::sqrt((1.0 - rho * rho) / (nu + 1.0));
  return {nu, K, [nu, rho, c](Stream& s, std::span<double> th) {
            th[0] = s.sign();
            for (std::size_t k = 1; k < th.size(); ++k) th[k] = th[k - 1] * (rho + c * student_t_sample(nu + 1.0, s));
          }};
}

/// GARCH(1,1) chain: Theta_k = (eps_k / |eps~_0|) prod_{i<k} (alpha1 eps_i^2 + beta1)^(1/2)
/// with eps~_0 tilted and eps_1, eps_2, ... ordinary innovations.
inline TailProcessSampler garch_tail_chain(const GarchSpec& spec, double alpha, std::int64_t K) {
  return {alpha, K, [spec, alpha](Stream& s, std::span<double> th) {
            const double e0 = sample_tilted_innovation({spec.innovation(), alpha}, s);
            const double a0 = std::fabs(e0);
            th[0] = e0 / a0;
            double prod = spec.alpha1() * e0 * e0 + spec.beta1();
            for (std::size_t k = 1; k < th.size(); ++k) {
              const double e = sample_innovation(spec.innovation(), s);
              th[k] = e * std::sqrt(prod) / a0;
              prod *= spec.alpha1() * e * e + spec.beta1();
            }
          }};
}

/// Theta_0 = +-1 and Theta_k = 0 afterwards (tails of an iid sequence).
inline TailProcessSampler degenerate_tail_chain(double alpha, std::int64_t K) {
  return {alpha, K, [](Stream& s, std::span<double> th) {
            th[0] = s.sign();
            for (std::size_t k = 1; k < th.size(); ++k) th[k] = 0.0;
          }};
}

// ---------------------------------------------------------------------------
// Limit covariance

namespace detail {

// A functional of the window centred at k, split into a factor g(Y_0 c)
// (indicator or log+) and a Y_0-free factor h(Theta).
struct PhiFactor {
  bool log_plus = false;  // false: indicator
  double c = 0.0;         // |Theta_k| / s
  double h = 0.0;         // Y_0-free factor
};

inline PhiFactor phi_factor(const PhiSpec& phi, std::span<const double> th, std::size_t k) {
  PhiFactor f;
  f.c = std::fabs(th[k]) / phi.s;
  switch (phi.family) {
    case PhiSpec::Family::Phi0: f.log_plus = true; f.h = 1.0; break;
    case PhiSpec::Family::Phi1: f.h = 1.0; break;
    case PhiSpec::Family::Phi2: {
      const double a = std::fabs(th[k]);
      f.h = (a > 0.0 && th[k + static_cast<std::size_t>(phi.t)] / a > phi.x) ? 1.0 : 0.0;
      break;
    }
    case PhiSpec::Family::Phi3: throw UnsupportedError("covariance of backward functionals is not supported");
  }
  return f;
}

// E[g1(Y c1) g2(Y c2)] for Y standard Pareto(alpha).
inline double pareto_pair_moment(double alpha, const PhiFactor& f1, const PhiFactor& f2) {
  if (!(f1.c > 0.0) || !(f2.c > 0.0)) return 0.0;
  const double L = std::max({1.0, 1.0 / f1.c, 1.0 / f2.c});
  const double lL = std::log(L);
  const double p = std::pow(L, -alpha);
  const double m1 = p * (lL + 1.0 / alpha);                                  // E[log Y; Y > L]
  const double m2 = p * (lL * lL + 2.0 * lL / alpha + 2.0 / (alpha * alpha));  // E[log^2 Y; Y > L]
  const double l1 = std::log(f1.c), l2 = std::log(f2.c);
  if (!f1.log_plus && !f2.log_plus) return p;
  if (f1.log_plus && f2.log_plus) return m2 + (l1 + l2) * m1 + l1 * l2 * p;
  const double l = f1.log_plus ? l1 : l2;
  return m1 + l * p;
}

inline std::int64_t phi_reach(const PhiSpec& phi) {
  if (phi.family == PhiSpec::Family::Phi3) throw UnsupportedError("covariance of backward functionals is not supported");
  if (phi.family == PhiSpec::Family::Phi2) {
    if (phi.t < 1) throw UnsupportedError("covariance needs forward lags t >= 1");
    return phi.t;
  }
  return 0;
}

}  // namespace detail

/// cov(Z(psi1), Z(psi2)) = E[psi1 psi2(Ybar_0)]
///   + sum_{k=1}^{K} (E[psi1(Ybar_0) psi2(Ybar_k)] + E[psi2(Ybar_0) psi1(Ybar_k)]),
/// the two-sided series folded onto forward lags. Terms whose window would
/// reach past Theta_K are dropped. The Pareto coordinate is integrated in
/// closed form, so the Monte Carlo runs over chain draws only.
inline Estimate limit_covariance_mc(const TailProcessSampler& sampler, const PhiSpec& psi1, const PhiSpec& psi2,
                                    const McOptions& opt = {100'000, 1, 1}) {
  const std::int64_t reach1 = detail::phi_reach(psi1), reach2 = detail::phi_reach(psi2);
  if (!(sampler.alpha > 0.0)) throw DomainError("covariance: alpha must be positive");
  if (opt.n_mc < 2) throw DomainError("covariance: need at least two draws");
  const std::int64_t K = sampler.K;
  std::vector<double> sums(64, 0.0), sq(64, 0.0);
  detail::mc_chunks(opt.n_mc, opt.seed, "limit_covariance", opt.jobs, [&](std::size_t c, std::int64_t n, Stream& s) {
    std::vector<double> th(static_cast<std::size_t>(K + 1));
    for (std::int64_t d = 0; d < n; ++d) {
      sampler.draw(s, th);
      double total = 0.0;
      // psi_a at window 0 times psi_b at window k.
      auto term = [&](const PhiSpec& a, std::int64_t ra, const PhiSpec& b, std::int64_t rb, std::int64_t k) {
        if (ra > K || k + rb > K) return 0.0;
        const auto fa = detail::phi_factor(a, th, 0);
        const auto fb = detail::phi_factor(b, th, static_cast<std::size_t>(k));
        if (fa.h == 0.0 || fb.h == 0.0) return 0.0;
        return fa.h * fb.h * detail::pareto_pair_moment(sampler.alpha, fa, fb);
      };
      total += term(psi1, reach1, psi2, reach2, 0);
      for (std::int64_t k = 1; k <= K; ++k) {
        total += term(psi1, reach1, psi2, reach2, k) + term(psi2, reach2, psi1, reach1, k);
      }
      sums[c] += total;
      sq[c] += total * total;
    }
  });
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t c = 0; c < sums.size(); ++c) {
    s1 += sums[c];
    s2 += sq[c];
  }
  const double n = static_cast<double>(opt.n_mc);
  const double mean = s1 / n;
  const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------
// Cluster moment bound

struct ClusterMomentOptions {
  std::int64_t n_mc = 10'000'000;  // path length
  std::uint64_t seed = 1;
  std::int64_t burn_in = 1000;
};

/// Least-squares slope of log(values) against log(grid), over positive values.
inline double log_log_slope(std::span<const double> grid, std::span<const double> values) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (values[i] > 0.0 && grid[i] > 0.0) {
      lx.push_back(std::log(grid[i]));
      ly.push_back(std::log(values[i]));
    }
  }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return stats::ols_slope(lx, ly);
}

inline constexpr double kClusterSlopeFloor = -0.1;
inline constexpr std::int64_t kMinNonzeroClusters = 10;

/// E[(sum_{i<=r} 1{|X_i| > (1-eps)u})^3] / (r v) with v = P{|X_0| > u}, for
/// u the empirical beta-quantile of |X| on one long path, at each beta in
/// `levels` (increasing). The report grid holds v; the verdict is Bounded when
/// the log-log slope of the ratio against v is >= -0.1, Inconclusive when the
/// deepest level has fewer than 10 nonzero block sums.
inline ConditionReport cluster_moment_check(const ModelSpec& model, const std::vector<double>& levels, std::int64_t r,
                                            double epsilon, const ClusterMomentOptions& opt = {}) {
  if (levels.empty() || !std::is_sorted(levels.begin(), levels.end()))
    throw DomainError("cluster moment check: levels must be increasing");
  if (r < 1) throw DomainError("cluster moment check: r must be >= 1");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("cluster moment check: epsilon must lie in [0,1)");
  Stream stream = derive_seed(opt.seed, {std::string("cluster_moment"), model.name});
  const TimeSeries s = generate(model, {opt.n_mc, 0, opt.burn_in}, stream);
  std::vector<double> a(s.core().begin(), s.core().end());
  for (double& v : a) v = std::fabs(v);
  std::vector<double> sorted(a);
  std::sort(sorted.begin(), sorted.end());
  const std::int64_t m = opt.n_mc / r;
  ConditionReport rep;
  rep.name = "cluster_third_moment";
  rep.rule = "bounded if log-log slope of ratio vs v >= -0.1; inconclusive if < 10 nonzero block sums at the deepest level";
  std::int64_t nonzero_last = 0;
  for (double beta : levels) {
    const auto idx = static_cast<std::size_t>(std::floor(beta * static_cast<double>(sorted.size())));
    const double u = sorted[std::min(idx, sorted.size() - 1)];
    const double lower = (1.0 - epsilon) * u;
    std::int64_t above = 0;
    for (double v : a) above += v > u;
    const double v = static_cast<double>(above) / static_cast<double>(a.size());
    std::vector<double> cubes(static_cast<std::size_t>(m));
    std::int64_t nonzero = 0;
    for (std::int64_t j = 0; j < m; ++j) {
      double cnt = 0.0;
      for (std::int64_t i = j * r; i < (j + 1) * r; ++i) cnt += a[static_cast<std::size_t>(i)] > lower;
      cubes[static_cast<std::size_t>(j)] = cnt * cnt * cnt;
      nonzero += cnt > 0.0;
    }
    const auto est = stats::mean_with_error(cubes);
    const double scale = static_cast<double>(r) * v;
    rep.grid.push_back(v);
    rep.values.push_back(v > 0.0 ? est.value / scale : std::numeric_limits<double>::quiet_NaN());
    rep.std_errors.push_back(v > 0.0 ? est.std_error / scale : std::numeric_limits<double>::quiet_NaN());
    nonzero_last = nonzero;
  }
  // grid (v) decreases along the levels; slope is taken against v.
  rep.exponent = levels.size() >= 2 ? log_log_slope(rep.grid, rep.values) : 0.0;
  if (nonzero_last < kMinNonzeroClusters) rep.verdict = Verdict::Inconclusive;
  else if (std::isnan(rep.exponent)) rep.verdict = Verdict::Inconclusive;
  else rep.verdict = rep.exponent >= kClusterSlopeFloor ? Verdict::Bounded : Verdict::Growing;
  return rep;
}

// ---------------------------------------------------------------------------
// Stochastic recurrence diagnostics

struct SreDiagnosticsOptions {
  std::int64_t n_mc = 10'000'000;  // draws for rho and path length for the rest
  std::uint64_t seed = 1;
  double level = 0.999;            // u = empirical level-quantile of X
  double epsilon = 0.1;
  double delta = 0.5;
  std::int64_t burn_in = 1000;
};

struct SreDiagnostics {
  Estimate rho;                  // E[C^xi]
  std::vector<std::vector<double>> pair_probs;  // [j-1][k-1], j <= k: P(min(X_j,X_k) > (1-eps)u | X_0 > (1-eps)u)
  ConditionReport decay;         // diagonal j = k with the fitted geometric rate in `exponent`
  ConditionReport power_sum;     // partial sums of the power-sum series over k
  double alpha = 0.0;
  double p = 0.0;
  double p_tilde = 0.0;
  Verdict verdict = Verdict::Inconclusive;
};

inline constexpr double kDecayBandLow = 0.7;
inline constexpr double kDecayBandHigh = 1.3;

/// rho = E[C^xi]; conditional joint exceedance probabilities on the grid
/// 1 <= j <= k <= r with a log-linear fit of the diagonal in k; partial sums of
///   sum_k (E[(X_k/u)^p (X_0/u)^q 1{X_k > u} | X_0 > u])^{1/(1+delta)}
/// with p the midpoint of (alpha (1+delta)/(1+2 delta), alpha) and
/// q = (alpha - p) / 2, so that p + q < alpha.
inline SreDiagnostics sre_condition_diagnostics(const SreSpec& spec, double xi, std::int64_t r,
                                                const SreDiagnosticsOptions& opt = {}) {
  const double alpha = sre_tail_index(spec).alpha;
  if (!(xi > 0.0 && xi < alpha)) throw DomainError("SRE diagnostics: need 0 < xi < alpha");
  if (r < 2) throw DomainError("SRE diagnostics: r must be >= 2");
  SreDiagnostics out;
  out.alpha = alpha;
  Stream cs = derive_seed(opt.seed, {std::string("sre_rho")});
  std::vector<double> powers(static_cast<std::size_t>(opt.n_mc));
  for (double& v : powers) v = std::pow(spec.draw(cs).c, xi);
  out.rho = stats::mean_with_error(powers);

  Stream ps = derive_seed(opt.seed, {std::string("sre_path")});
  const TimeSeries s = generate_sre(spec, {opt.n_mc, r, opt.burn_in}, ps);
  std::vector<double> sorted(s.core().begin(), s.core().end());
  const auto idx = static_cast<std::size_t>(std::floor(opt.level * static_cast<double>(sorted.size())));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end());
  const double u = sorted[idx];
  const double lower = (1.0 - opt.epsilon) * u;

  out.p = 0.5 * alpha * (1.0 + (1.0 + opt.delta) / (1.0 + 2.0 * opt.delta));
  out.p_tilde = 0.5 * (alpha - out.p);
  const auto ru = static_cast<std::size_t>(r);
  std::vector<std::vector<double>> joint(ru, std::vector<double>(ru, 0.0));
  std::vector<double> moment(ru, 0.0);
  std::int64_t cond_lower = 0, cond_u = 0;
  for (std::int64_t i = 1; i + r <= opt.n_mc; ++i) {
    const double x0 = s[i];
    if (x0 > lower) {
      ++cond_lower;
      for (std::int64_t k = 1; k <= r; ++k) {
        const double xk = s[i + k];
        if (!(xk > lower)) continue;
        for (std::int64_t j = 1; j <= k; ++j) {
          if (s[i + j] > lower) joint[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(k - 1)] += 1.0;
        }
      }
    }
    if (x0 > u) {
      ++cond_u;
      for (std::int64_t k = 1; k <= r; ++k) {
        const double xk = s[i + k];
        if (xk > u) moment[static_cast<std::size_t>(k - 1)] += std::pow(xk / u, out.p) * std::pow(x0 / u, out.p_tilde);
      }
    }
  }
  if (cond_lower == 0 || cond_u == 0) throw NoExceedancesError();
  for (auto& row : joint)
    for (double& v : row) v /= static_cast<double>(cond_lower);
  out.pair_probs = joint;

  out.decay.name = "pair_exceedance_decay";
  out.decay.rule = "geometric rate from a least-squares fit of log P(X_k > (1-eps)u | X_0 > (1-eps)u) on k; "
                   "bounded if the rate lies in [0.7 rho, 1.3 rho]";
  std::vector<double> ks, logs;
  for (std::int64_t k = 1; k <= r; ++k) {
    const double v = joint[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(k - 1)];
    out.decay.grid.push_back(static_cast<double>(k));
    out.decay.values.push_back(v);
    out.decay.std_errors.push_back(std::sqrt(v * (1.0 - v) / static_cast<double>(cond_lower)));
    if (v > 0.0) {
      ks.push_back(static_cast<double>(k));
      logs.push_back(std::log(v));
    }
  }
  if (ks.size() >= 2) {
    out.decay.exponent = std::exp(stats::ols_slope(ks, logs));
    const double rate = out.decay.exponent;
    out.decay.verdict = (rate >= kDecayBandLow * out.rho.value && rate <= kDecayBandHigh * out.rho.value)
                            ? Verdict::Bounded
                            : Verdict::Growing;
  }

  out.power_sum.name = "power_sum";
  out.power_sum.rule = "bounded if the last term adds less than 5% to the partial sum";
  double partial = 0.0;
  for (std::int64_t k = 1; k <= r; ++k) {
    const double m = moment[static_cast<std::size_t>(k - 1)] / static_cast<double>(cond_u);
    partial += std::pow(m, 1.0 / (1.0 + opt.delta));
    out.power_sum.grid.push_back(static_cast<double>(k));
    out.power_sum.values.push_back(partial);
  }
  {
    const auto& v = out.power_sum.values;
    const double last = v.back() - v[v.size() - 2];
    out.power_sum.exponent = v.back() > 0.0 ? last / v.back() : 0.0;
    out.power_sum.verdict = (v.back() == 0.0 || last < 0.05 * v.back()) ? Verdict::Bounded : Verdict::Growing;
  }

  out.verdict = out.rho.value < 1.0 ? Verdict::Bounded : Verdict::Violated;
  return out;
}

// ---------------------------------------------------------------------------
// Consistency of the order statistic threshold

struct OsConsistencyOptions {
  std::int64_t reps = 100;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  QuantileOptions quantiles;  // for models without an analytic quantile
};

inline constexpr double kOsMeanTolerance = 0.05;

/// X_{n-k:n} / F^{-1}(1 - k/n) over repetitions for each n in the grid, with
/// k = k_rule(n). Values are the means, std_errors the standard deviations.
/// Bounded when the standard deviations strictly decrease along the grid and
/// the last mean is within 0.05 of 1.
inline ConditionReport os_consistency_check(const ModelSpec& model, const std::vector<std::int64_t>& n_grid,
                                            const std::function<std::int64_t(std::int64_t)>& k_rule,
                                            const OsConsistencyOptions& opt = {}) {
  if (n_grid.empty()) throw DomainError("os consistency: empty grid");
  std::vector<double> levels;
  std::vector<std::int64_t> ks;
  for (std::int64_t n : n_grid) {
    const std::int64_t k = k_rule(n);
    if (k < 1 || 2 * k > n) throw DomainError("os consistency: need 1 <= k <= n/2 (k/n must be small)");
    ks.push_back(k);
    levels.push_back(1.0 - static_cast<double>(k) / static_cast<double>(n));
  }
  const auto q = marginal_quantiles(model, levels, opt.quantiles);
  ConditionReport rep;
  rep.name = "order_statistic_ratio";
  rep.rule = "bounded if sd strictly decreases along the grid and |mean - 1| < 0.05 at the largest n";
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    std::vector<double> ratios(static_cast<std::size_t>(opt.reps));
    parallel_for(ratios.size(), opt.jobs, [&](std::size_t rr) {
      Stream s = derive_seed(opt.seed, {std::string("os_consistency"), model.name,
                                        static_cast<std::uint64_t>(n_grid[g]), static_cast<std::uint64_t>(rr)});
      const TimeSeries ts = generate(model, {n_grid[g], 0, 1000}, s);
      ratios[rr] = order_statistic_threshold(ts, ks[g]) / q[g].value;
    });
    rep.grid.push_back(static_cast<double>(n_grid[g]));
    rep.values.push_back(stats::mean(ratios));
    rep.std_errors.push_back(stats::sd(ratios));
  }
  bool decreasing = true;
  for (std::size_t g = 1; g < rep.std_errors.size(); ++g) decreasing = decreasing && rep.std_errors[g] < rep.std_errors[g - 1];
  rep.exponent = n_grid.size() >= 2 ? log_log_slope(rep.grid, rep.std_errors) : std::numeric_limits<double>::quiet_NaN();
  rep.verdict = decreasing && std::fabs(rep.values.back() - 1.0) < kOsMeanTolerance ? Verdict::Bounded : Verdict::Growing;
  return rep;
}

// ---------------------------------------------------------------------------
// Normality of the standardized estimators

struct EstimatorQuery {
  EstimatorKind kind = EstimatorKind::Forward;
  std::int64_t lag = 1;
  double x = 0.5;
};

struct CltReport {
  std::vector<double> standardized;  // sqrt(k) (estimate - target), missing replicates dropped
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks_normal = 0.0;  // KS distance to the normal with the sample mean and sd
  std::int64_t missing = 0;
};

/// Estimated quantity per replicate: P{Theta_t > x} for forward/backward,
/// alpha for Hill.
inline double reported_value(const EstimateRecord& r) {
  return r.kind == EstimatorKind::Hill ? r.estimate : r.survival();
}

inline CltReport summarize_standardized(std::vector<double> z, std::int64_t missing) {
  CltReport rep;
  rep.missing = missing;
  if (z.size() < 3) throw DomainError("normality check: fewer than three usable replicates");
  rep.mean = stats::mean(z);
  rep.variance = stats::variance(z);
  rep.skewness = stats::skewness(z);
  rep.excess_kurtosis = stats::excess_kurtosis(z);
  const double m = rep.mean, sdv = std::sqrt(rep.variance);
  rep.ks_normal = stats::ks_distance(z, [m, sdv](double v) { return normal_cdf((v - m) / sdv); });
  rep.standardized = std::move(z);
  return rep;
}

/// Estimates over `reps` independent paths of length n. Missing values
/// (no exceedances) are NaN.
inline std::vector<double> replicate_estimates(const ModelSpec& model, std::int64_t n, const ThresholdSpec& threshold,
                                               const EstimatorQuery& query, std::int64_t reps, std::uint64_t seed,
                                               unsigned jobs = 1) {
  std::vector<double> out(static_cast<std::size_t>(reps), std::numeric_limits<double>::quiet_NaN());
  parallel_for(out.size(), jobs, [&](std::size_t r) {
    Stream s = derive_seed(seed, {std::string("clt"), model.name, static_cast<std::uint64_t>(r)});
    const TimeSeries ts = generate(model, {n, std::max<std::int64_t>(1, query.lag), 1000}, s);
    const ExceedanceSet exc = resolve_threshold(ts, threshold);
    if (exc.empty()) return;
    out[r] = reported_value(estimate(query.kind, ts, query.lag, query.x, exc));
  });
  return out;
}

/// Distribution of sqrt(k) (estimate - target) with k = n (1 - beta) for TQ
/// thresholds and k itself for OS thresholds; the target should be a
/// finite-threshold value (p_beta, e_beta or 1/a_beta).
inline CltReport clt_normality_check(const ModelSpec& model, std::int64_t n, const ThresholdSpec& threshold,
                                     const EstimatorQuery& query, std::int64_t reps, double target,
                                     std::uint64_t seed = 1, unsigned jobs = 1) {
  double k = 0.0;
  if (const auto* os = std::get_if<OrderStatistic>(&threshold)) k = static_cast<double>(os->k);
  else if (const auto* q = std::get_if<QuantileLevel>(&threshold)) k = static_cast<double>(n) * (1.0 - q->beta);
  else throw DomainError("normality check: use an OS or TQ threshold");
  const auto est = replicate_estimates(model, n, threshold, query, reps, seed, jobs);
  std::vector<double> z;
  std::int64_t missing = 0;
  for (double v : est) {
    if (std::isnan(v)) ++missing;
    else z.push_back(std::sqrt(k) * (v - target));
  }
  return summarize_standardized(std::move(z), missing);
}

}  // namespace spectail
