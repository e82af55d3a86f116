#pragma once

// Reference values for the simulation study: tail indices, quantiles of
// |X_0|, the law of the spectral tail process at positive lags, and the
// finite-threshold conditional quantities p_beta, e_beta, a_beta.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spectail/distributions.hpp"
#include "spectail/error.hpp"
#include "spectail/models.hpp"
#include "spectail/parallel.hpp"
#include "spectail/random.hpp"
#include "spectail/series.hpp"
#include "spectail/stats.hpp"

namespace spectail {

using stats::Estimate;

// ---------------------------------------------------------------------------
// Tail indices

struct TailIndexResult {
  enum class Method { RootFind, Analytic };

  double alpha = 0.0;
  Method method = Method::RootFind;
  double mc_std_error = 0.0;
  double residual = 0.0;  // |mean moment - 1| at the returned root
};

namespace detail {

// Positive root of m(a) = sum_i w_i exp(a L_i) / sum_i w_i - 1, where m is
// convex with m(0) = 0 and m'(0) < 0. Weights default to 1.
struct MomentRoot {
  double alpha = 0.0;
  double derivative = 0.0;  // m'(alpha)
  double residual = 0.0;
};

inline MomentRoot moment_root(const std::vector<double>& logs, const std::vector<double>& weights, double tol) {
  const bool weighted = !weights.empty();
  double wsum = 0.0;
  if (weighted) for (double w : weights) wsum += w;
  else wsum = static_cast<double>(logs.size());
  auto eval = [&](double a, double* deriv) {
    double m = 0.0, d = 0.0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const double w = weighted ? weights[i] : 1.0;
      const double e = std::exp(a * logs[i]);
      m += w * e;
      d += w * logs[i] * e;
    }
    if (deriv) *deriv = d / wsum;
    return m / wsum - 1.0;
  };
  double mean_log = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) mean_log += (weighted ? weights[i] : 1.0) * logs[i];
  if (!(mean_log < 0.0)) throw NoRootError("moment equation: mean log factor is not negative");
  double hi = 0.5;
  double lo = 0.0;
  while (eval(hi, nullptr) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 100.0) throw NoRootError("moment equation: no root in (0, 100]");
  }
  double a = 0.5 * (lo + hi);
  double deriv = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double f = eval(a, &deriv);
    if (f > 0.0) hi = a; else lo = a;
    double next = a - f / deriv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::fabs(next - a);
    a = next;
    if (step < tol || hi - lo < tol) break;
  }
  const double res = eval(a, &deriv);
  return {a, deriv, std::fabs(res)};
}

}  // namespace detail

/// Solves E[(alpha1 eps^2 + beta1)^(a/2)] = 1 for a > 0. The expectation is
/// a Monte Carlo average over n_mc innovations drawn by stratified inversion
/// (one uniform per stratum of width 1/n_mc), which keeps the estimate stable
/// when the moment has heavy tails. The reported error is the plain iid
/// standard error and therefore conservative.
inline TailIndexResult garch_tail_index(const GarchSpec& spec, std::int64_t n_mc = 10'000'000, double tol = 1e-10,
                                        std::uint64_t seed = 1) {
  if (!(spec.alpha1() > 0.0)) throw NoRootError("GARCH tail index: alpha1 = 0 gives no positive root");
  if (n_mc < 100) throw DomainError("GARCH tail index: n_mc too small");
  Stream stream = derive_seed(seed, {std::string("garch_tail_index")});
  const auto& inn = spec.innovation();
  std::vector<double> logs(static_cast<std::size_t>(n_mc));
  const double nd = static_cast<double>(n_mc);
  for (std::int64_t i = 0; i < n_mc; ++i) {
    // |eps| at upper two-sided tail probability q.
    const double q = (static_cast<double>(i) + stream.uniform_open()) / nd;
    const double abs_eps = inn.is_normal() ? -normal_quantile(0.5 * q)
                                           : inn.t_scale() * student_t_quantile_upper(inn.nu, 0.5 * q);
    logs[static_cast<std::size_t>(i)] = 0.5 * std::log(spec.alpha1() * abs_eps * abs_eps + spec.beta1());
  }
  const auto root = detail::moment_root(logs, {}, tol);
  double ss = 0.0;
  for (double l : logs) {
    const double d = std::exp(root.alpha * l) - 1.0;
    ss += d * d;
  }
  const double se_moment = std::sqrt(ss / (nd - 1.0) / nd);
  return {root.alpha, TailIndexResult::Method::RootFind, se_moment / root.derivative, root.residual};
}

/// Positive root of E[C^a] = 1. Closed form for lognormal C, exact
/// expectation for discrete C, Monte Carlo otherwise.
inline TailIndexResult sre_tail_index(const SreSpec& spec, std::int64_t n_mc = 1'000'000, double tol = 1e-10,
                                      std::uint64_t seed = 1) {
  if (auto a = spec.analytic_alpha()) {
    if (!(*a > 0.0)) throw NoRootError("SRE tail index: E[log C] is not negative");
    return {*a, TailIndexResult::Method::Analytic, 0.0, 0.0};
  }
  std::vector<double> logs, weights;
  if (spec.kind() == SreSpec::Kind::DiscreteExponential) {
    const auto& v = spec.discrete_values();
    const auto& p = spec.discrete_probs();
    bool any_above = false;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (p[j] <= 0.0) continue;
      if (v[j] > 1.0) any_above = true;
      logs.push_back(std::log(v[j]));
      weights.push_back(p[j]);
    }
    if (!any_above) throw NoRootError("SRE tail index: C < 1 almost surely, E[C^a] < 1 for all a > 0");
    const auto root = detail::moment_root(logs, weights, tol);
    return {root.alpha, TailIndexResult::Method::RootFind, 0.0, root.residual};
  }
  Stream stream = derive_seed(seed, {std::string("sre_tail_index")});
  logs.resize(static_cast<std::size_t>(n_mc));
  bool any_above = false;
  for (double& l : logs) {
    const double c = spec.draw(stream).c;
    if (c > 1.0) any_above = true;
    l = std::log(c);
  }
  if (!any_above) throw NoRootError("SRE tail index: no sampled C exceeds 1, E[C^a] < 1 for all a > 0");
  const auto root = detail::moment_root(logs, {}, tol);
  double ss = 0.0;
  for (double l : logs) {
    const double d = std::exp(root.alpha * l) - 1.0;
    ss += d * d;
  }
  const double nd = static_cast<double>(n_mc);
  return {root.alpha, TailIndexResult::Method::RootFind, std::sqrt(ss / (nd - 1.0) / nd) / root.derivative,
          root.residual};
}

/// Tail index of any built-in model.
inline double model_tail_index(const ModelSpec& model, std::int64_t n_mc = 10'000'000) {
  if (const auto* g = std::get_if<GarchSpec>(&model.params)) return garch_tail_index(*g, n_mc).alpha;
  if (const auto* c = std::get_if<MarkovCopulaSpec>(&model.params)) return c->marginal_nu;
  if (const auto* s = std::get_if<SreSpec>(&model.params)) return sre_tail_index(*s).alpha;
  return std::get<IidParetoSpec>(model.params).alpha;
}

// ---------------------------------------------------------------------------
// Quantiles of |X_0|

struct QuantileEstimate {
  double beta = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  bool analytic = false;
};

struct QuantileOptions {
  std::int64_t m = 1'000'000;  // path length per repetition
  std::int64_t reps = 20;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::int64_t burn_in = 1000;
};

/// F^{-1}(beta) of |X_0| for each beta. Copula and Pareto models are
/// analytic; GARCH and SRE use the average over repetitions of the
/// floor(m beta)-th ascending order statistic of |X_1|, ..., |X_m|, with
/// standard error sd / sqrt(R).
inline std::vector<QuantileEstimate> marginal_quantiles(const ModelSpec& model, const std::vector<double>& betas,
                                                        const QuantileOptions& opt = {}) {
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw DomainError("marginal quantile: beta must lie in (0,1)");
  }
  std::vector<QuantileEstimate> out;
  if (const auto* c = std::get_if<MarkovCopulaSpec>(&model.params)) {
    for (double b : betas) out.push_back({b, student_t_quantile(c->marginal_nu, 0.5 * (1.0 + b)), 0.0, true});
    return out;
  }
  if (const auto* p = std::get_if<IidParetoSpec>(&model.params)) {
    for (double b : betas) out.push_back({b, std::pow(1.0 - b, -1.0 / p->alpha), 0.0, true});
    return out;
  }
  std::vector<std::int64_t> ranks;
  for (double b : betas) {
    const auto rank = static_cast<std::int64_t>(std::floor(static_cast<double>(opt.m) * b));
    if (rank < 1 || rank >= opt.m) throw DomainError("marginal quantile: m too small to resolve beta");
    ranks.push_back(rank);
  }
  if (opt.reps < 1) throw DomainError("marginal quantile: need at least one repetition");
  std::vector<std::vector<double>> per_rep(static_cast<std::size_t>(opt.reps));
  parallel_for(static_cast<std::size_t>(opt.reps), opt.jobs, [&](std::size_t r) {
    Stream stream = derive_seed(opt.seed, {std::string("quantile"), model.name, static_cast<std::uint64_t>(r)});
    const TimeSeries s = generate(model, {opt.m, 0, opt.burn_in}, stream);
    std::vector<double> a(s.core().begin(), s.core().end());
    for (double& v : a) v = std::fabs(v);
    std::vector<double>& q = per_rep[r];
    for (std::int64_t rank : ranks) {
      const auto pos = a.begin() + (rank - 1);
      std::nth_element(a.begin(), pos, a.end());
      q.push_back(*pos);
    }
  });
  for (std::size_t j = 0; j < betas.size(); ++j) {
    std::vector<double> vals;
    for (const auto& q : per_rep) vals.push_back(q[j]);
    const auto est = stats::mean_with_error(vals);
    out.push_back({betas[j], est.value, est.std_error, false});
  }
  return out;
}

inline QuantileEstimate marginal_quantile(const ModelSpec& model, double beta, const QuantileOptions& opt = {}) {
  return marginal_quantiles(model, {beta}, opt).front();
}

// ---------------------------------------------------------------------------
// Spectral tail process at positive lags

namespace detail {

inline void require_forward_lag(std::int64_t t) {
  if (t < 1) throw UnsupportedError("spectral law is available for forward lags t >= 1 only");
}

// Chunks of a Monte Carlo loop, each with its own stream.
template <class Body>
void mc_chunks(std::int64_t n_mc, std::uint64_t seed, const std::string& label, unsigned jobs, Body&& body) {
  constexpr std::int64_t kChunks = 64;
  parallel_for(kChunks, jobs, [&](std::size_t c) {
    const std::int64_t begin = n_mc * static_cast<std::int64_t>(c) / kChunks;
    const std::int64_t end = n_mc * static_cast<std::int64_t>(c + 1) / kChunks;
    Stream stream = derive_seed(seed, {label, static_cast<std::uint64_t>(c)});
    body(c, end - begin, stream);
  });
}

inline std::vector<Estimate> binomial_estimates(const std::vector<std::int64_t>& hits, std::int64_t n) {
  std::vector<Estimate> out;
  for (std::int64_t h : hits) {
    const double p = static_cast<double>(h) / static_cast<double>(n);
    out.push_back({p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))});
  }
  return out;
}

}  // namespace detail

/// One draw of Theta_t for GARCH(1,1):
/// (eps_t / |eps~_0|) prod_{i=0}^{t-1} (alpha1 eps_i^2 + beta1)^(1/2), with
/// eps~_0 from the tilted density and eps_1, ..., eps_t ordinary innovations.
inline double garch_spectral_draw(const GarchSpec& spec, double alpha, std::int64_t t, Stream& stream) {
  const double e0 = sample_tilted_innovation({spec.innovation(), alpha}, stream);
  double prod = spec.alpha1() * e0 * e0 + spec.beta1();
  double e = 0.0;
  for (std::int64_t i = 1; i <= t; ++i) {
    e = sample_innovation(spec.innovation(), stream);
    if (i < t) prod *= spec.alpha1() * e * e + spec.beta1();
  }
  return e * std::sqrt(prod) / std::fabs(e0);
}

struct McOptions {
  std::int64_t n_mc = 10'000'000;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

/// P{Theta_t > x} for each x, from common draws.
inline std::vector<Estimate> spectral_survival_garch(const GarchSpec& spec, std::int64_t t,
                                                     const std::vector<double>& xs, double alpha,
                                                     const McOptions& opt = {}) {
  detail::require_forward_lag(t);
  if (!(alpha > 0.0)) throw DomainError("spectral law: alpha must be positive");
  std::vector<std::vector<std::int64_t>> hits(64, std::vector<std::int64_t>(xs.size(), 0));
  detail::mc_chunks(opt.n_mc, opt.seed, "spectral_garch", opt.jobs, [&](std::size_t c, std::int64_t n, Stream& s) {
    auto& h = hits[c];
    for (std::int64_t k = 0; k < n; ++k) {
      const double theta = garch_spectral_draw(spec, alpha, t, s);
      for (std::size_t j = 0; j < xs.size(); ++j) h[j] += theta > xs[j];
    }
  });
  std::vector<std::int64_t> total(xs.size(), 0);
  for (const auto& h : hits)
    for (std::size_t j = 0; j < xs.size(); ++j) total[j] += h[j];
  return detail::binomial_estimates(total, opt.n_mc);
}

/// P{Theta_t > x} for the t-copula chain with t_nu marginal. Lag 1 is closed
/// form: 1/2 Fbar_{nu+1}((x - rho)/c) + 1/2 Fbar_{nu+1}((x + rho)/c) with
/// c = sqrt((1 - rho^2)/(nu + 1)). Larger lags use the multiplicative chain
/// Theta_k = Theta_{k-1} (rho + c T_k).
inline Estimate spectral_survival_tcopula(double nu, double rho, std::int64_t t, double x,
                                          const McOptions& opt = {1'000'000, 1, 1}) {
  detail::require_forward_lag(t);
  if (!(nu > 0.0) || !(std::fabs(rho) < 1.0)) throw DomainError("t copula: need nu > 0 and |rho| < 1");
  const double c = std::sqrt((1.0 - rho * rho) / (nu + 1.0));
  if (t == 1) {
    return {0.5 * student_t_sf(nu + 1.0, (x - rho) / c) + 0.5 * student_t_sf(nu + 1.0, (x + rho) / c), 0.0};
  }
  std::vector<std::int64_t> hits(64, 0);
  detail::mc_chunks(opt.n_mc, opt.seed, "spectral_tcopula", opt.jobs, [&](std::size_t ch, std::int64_t n, Stream& s) {
    for (std::int64_t k = 0; k < n; ++k) {
      double theta = s.sign();
      for (std::int64_t i = 0; i < t; ++i) theta *= rho + c * student_t_sample(nu + 1.0, s);
      hits[ch] += theta > x;
    }
  });
  std::int64_t total = 0;
  for (auto h : hits) total += h;
  return detail::binomial_estimates({total}, opt.n_mc).front();
}

struct ExtrapolationOptions {
  std::vector<double> levels = {1.0 - 1e-4, 1.0 - 1e-5, 1.0 - 1e-6};
  std::int64_t n_mc = 1'000'000;  // per level
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct ExtrapolatedSurvival {
  double x = 0.0;
  Estimate estimate;                   // deepest level
  std::vector<Estimate> per_level;     // in the order of the levels
  double spread = 0.0;                 // max - min over levels
  bool converged = true;               // spread <= 5 standard errors
  std::string warning;
};

/// P(X_t/|X_0| > x | |X_0| > F^{-1}(level)) for a copula chain, with |X_0|
/// drawn exactly from the marginal tail above the level and a random sign,
/// then the chain rolled forward t steps.
inline std::vector<ExtrapolatedSurvival> spectral_survival_extrapolated(const MarkovCopulaSpec& spec, std::int64_t t,
                                                                        const std::vector<double>& xs,
                                                                        const ExtrapolationOptions& opt = {}) {
  detail::require_forward_lag(t);
  spec.validate();
  if (opt.levels.empty()) throw DomainError("extrapolation: no levels given");
  for (double l : opt.levels) {
    if (!(l > 0.0 && l < 1.0)) throw DomainError("extrapolation: levels must lie in (0,1)");
  }
  const double nu = spec.marginal_nu;
  std::vector<ExtrapolatedSurvival> out(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) out[j].x = xs[j];
  for (std::size_t li = 0; li < opt.levels.size(); ++li) {
    const double tail = 1.0 - opt.levels[li];
    std::vector<std::vector<std::int64_t>> hits(64, std::vector<std::int64_t>(xs.size(), 0));
    detail::mc_chunks(opt.n_mc, mix_seed(opt.seed, {static_cast<std::uint64_t>(li)}), "extrapolated", opt.jobs,
                      [&](std::size_t c, std::int64_t n, Stream& s) {
                        auto& h = hits[c];
                        for (std::int64_t k = 0; k < n; ++k) {
                          const double abs_x0 = student_t_quantile_upper(nu, 0.5 * tail * s.uniform_open());
                          const double x0 = s.sign() * abs_x0;
                          double xt = x0;
                          for (std::int64_t i = 0; i < t; ++i) xt = copula_chain_step(spec, xt, s);
                          const double ratio = xt / abs_x0;
                          for (std::size_t jj = 0; jj < xs.size(); ++jj) h[jj] += ratio > xs[jj];
                        }
                      });
    std::vector<std::int64_t> total(xs.size(), 0);
    for (const auto& h : hits)
      for (std::size_t jj = 0; jj < xs.size(); ++jj) total[jj] += h[jj];
    const auto est = detail::binomial_estimates(total, opt.n_mc);
    for (std::size_t jj = 0; jj < xs.size(); ++jj) out[jj].per_level.push_back(est[jj]);
  }
  for (auto& r : out) {
    double lo = r.per_level.front().value, hi = lo;
    for (const auto& e : r.per_level) {
      lo = std::min(lo, e.value);
      hi = std::max(hi, e.value);
    }
    r.estimate = r.per_level.back();
    r.spread = hi - lo;
    if (r.spread > 5.0 * std::max(r.estimate.std_error, 1e-300)) {
      r.converged = false;
      r.warning = "estimates at the extrapolation levels differ by more than 5 standard errors";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pre-asymptotic quantities

struct PreasymptoticOptions {
  std::int64_t m = 1'000'000;  // path length per repetition
  std::int64_t reps = 20;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::int64_t burn_in = 1000;
};

struct PreasymptoticResult {
  double beta = 0.0;
  double threshold = 0.0;
  std::int64_t lag = 1;
  std::vector<double> xs;
  std::vector<Estimate> p;  // per x
  std::vector<Estimate> e;  // per x
  Estimate a;
  std::int64_t conditioning_events = 0;  // summed over repetitions
};

/// Monte Carlo estimates of
///   p_beta(x) = P(X_t/|X_0| > x | |X_0| > u),
///   a_beta    = E[log(|X_0|/u) | |X_0| > u],
///   e_beta(x) = E[|X_{-t}/X_0|^{1/a_beta} 1{X_0/|X_{-t}| > x} | |X_0| > u]
/// for u = thresholds[j] (the beta_j quantile of |X_0|). Each repetition
/// is one path of length m; e uses that repetition's own a. Standard errors
/// are sd / sqrt(R) over repetitions.
inline std::vector<PreasymptoticResult> preasymptotic(const ModelSpec& model, const std::vector<double>& betas,
                                                      const std::vector<double>& thresholds, std::int64_t t,
                                                      const std::vector<double>& xs,
                                                      const PreasymptoticOptions& opt = {}) {
  if (betas.size() != thresholds.size()) throw DomainError("preasymptotic: one threshold per level");
  if (t < 1) throw DomainError("preasymptotic: lag must be positive");
  if (opt.reps < 2) throw DomainError("preasymptotic: need at least two repetitions");
  const std::size_t nb = betas.size(), nx = xs.size();
  struct Rep {
    std::vector<double> p, e, a;
    std::vector<std::int64_t> count;
  };
  std::vector<Rep> reps(static_cast<std::size_t>(opt.reps));
  parallel_for(reps.size(), opt.jobs, [&](std::size_t r) {
    Stream stream = derive_seed(opt.seed, {std::string("preasymptotic"), model.name, static_cast<std::uint64_t>(r)});
    const TimeSeries s = generate(model, {opt.m, t, opt.burn_in}, stream);
    Rep& rep = reps[r];
    rep.p.assign(nb * nx, 0.0);
    rep.e.assign(nb * nx, 0.0);
    rep.a.assign(nb, 0.0);
    rep.count.assign(nb, 0);
    for (std::size_t b = 0; b < nb; ++b) {
      const double u = thresholds[b];
      double log_sum = 0.0;
      std::int64_t count = 0;
      std::vector<std::int64_t> fwd(nx, 0);
      for (std::int64_t i = 1; i <= opt.m; ++i) {
        const double ax = std::fabs(s[i]);
        if (!(ax > u)) continue;
        ++count;
        log_sum += std::log(ax / u);
        const double ratio = s[i + t] / ax;
        for (std::size_t j = 0; j < nx; ++j) fwd[j] += ratio > xs[j];
      }
      if (count == 0) throw NoExceedancesError();
      const double a = log_sum / static_cast<double>(count);
      std::vector<double> bwd(nx, 0.0);
      for (std::int64_t i = 1; i <= opt.m; ++i) {
        const double x0 = s[i];
        if (!(std::fabs(x0) > u)) continue;
        const double back = s[i - t];
        if (back == 0.0) continue;
        const double w = std::pow(std::fabs(back / x0), 1.0 / a);
        const double ratio = x0 / std::fabs(back);
        for (std::size_t j = 0; j < nx; ++j) {
          if (ratio > xs[j]) bwd[j] += w;
        }
      }
      rep.a[b] = a;
      rep.count[b] = count;
      for (std::size_t j = 0; j < nx; ++j) {
        rep.p[b * nx + j] = static_cast<double>(fwd[j]) / static_cast<double>(count);
        rep.e[b * nx + j] = bwd[j] / static_cast<double>(count);
      }
    }
  });
  std::vector<PreasymptoticResult> out;
  for (std::size_t b = 0; b < nb; ++b) {
    PreasymptoticResult res{betas[b], thresholds[b], t, xs, {}, {}, {}, 0};
    std::vector<double> av;
    for (const auto& rep : reps) {
      av.push_back(rep.a[b]);
      res.conditioning_events += rep.count[b];
    }
    res.a = stats::mean_with_error(av);
    for (std::size_t j = 0; j < nx; ++j) {
      std::vector<double> pv, ev;
      for (const auto& rep : reps) {
        pv.push_back(rep.p[b * nx + j]);
        ev.push_back(rep.e[b * nx + j]);
      }
      res.p.push_back(stats::mean_with_error(pv));
      res.e.push_back(stats::mean_with_error(ev));
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace spectail
