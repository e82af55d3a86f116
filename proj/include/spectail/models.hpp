#pragma once

// Stationary heavy-tailed generators: GARCH(1,1), first-order Markov chains
// with a Student t marginal and a t or Gumbel-Hougaard copula, solutions of
// the stochastic recurrence X_t = C_t X_{t-1} + D_t, and iid Pareto noise.

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "spectail/distributions.hpp"
#include "spectail/error.hpp"
#include "spectail/random.hpp"
#include "spectail/series.hpp"

namespace spectail {

// ---------------------------------------------------------------------------
// GARCH(1,1)

/// sigma_t^2 = alpha0 + alpha1 X_{t-1}^2 + beta1 sigma_{t-1}^2, X_t = sigma_t eps_t.
///
/// Construction checks E[log(alpha1 eps^2 + beta1)] < 0, the condition for a
/// strictly stationary solution, by Monte Carlo when alpha1 + beta1 >= 1.
class GarchSpec {
 public:
  GarchSpec(double alpha0, double alpha1, double beta1, InnovationSpec innovation)
      : alpha0_(alpha0), alpha1_(alpha1), beta1_(beta1), innovation_(innovation) {
    if (!(alpha0 > 0.0)) throw DomainError("GARCH: alpha0 must be positive");
    if (!(alpha1 >= 0.0) || !(beta1 >= 0.0)) throw DomainError("GARCH: alpha1 and beta1 must be nonnegative");
    if (alpha1 + beta1 >= 1.0) {
      Stream s(0x6A09E667F3BCC908ULL);
      double acc = 0.0;
      constexpr int kDraws = 200000;
      for (int i = 0; i < kDraws; ++i) {
        const double e = sample_innovation(innovation_, s);
        acc += std::log(alpha1 * e * e + beta1);
      }
      if (!(acc / kDraws < 0.0)) throw DomainError("GARCH: E[log(alpha1 eps^2 + beta1)] >= 0, no stationary solution");
    }
  }

  double alpha0() const { return alpha0_; }
  double alpha1() const { return alpha1_; }
  double beta1() const { return beta1_; }
  const InnovationSpec& innovation() const { return innovation_; }

  /// Starting variance: the stationary mean when it exists, alpha0 otherwise.
  double initial_variance() const {
    const double persistence = alpha1_ + beta1_;
    return persistence < 1.0 ? alpha0_ / (1.0 - persistence) : alpha0_;
  }

 private:
  double alpha0_;
  double alpha1_;
  double beta1_;
  InnovationSpec innovation_;
};

inline TimeSeries generate_garch(const GarchSpec& spec, const SeriesRequest& req, Stream& stream,
                                 std::string tag = "garch") {
  if (req.n < 1 || req.max_lag < 0 || req.burn_in < 0) throw DomainError("generate: invalid series request");
  const std::int64_t total = req.n + 2 * req.max_lag;
  std::vector<double> out(static_cast<std::size_t>(total));
  const double a0 = spec.alpha0(), a1 = spec.alpha1(), b1 = spec.beta1();
  double sigma2 = spec.initial_variance();
  const std::int64_t steps = req.burn_in + total;
  for (std::int64_t t = 0; t < steps; ++t) {
    const double x = std::sqrt(sigma2) * sample_innovation(spec.innovation(), stream);
    if (!std::isfinite(x)) throw GenerationError("GARCH recursion overflowed", t - req.burn_in + 1 - req.max_lag);
    if (t >= req.burn_in) out[static_cast<std::size_t>(t - req.burn_in)] = x;
    sigma2 = a0 + a1 * x * x + b1 * sigma2;
  }
  return TimeSeries(std::move(out), req.max_lag, std::move(tag), stream.seed());
}

// ---------------------------------------------------------------------------
// Markov copula chains

struct TCopula {
  double nu = 4.0;
  double rho = 0.0;
};

struct GumbelCopula {
  double theta = 1.0;
};

struct MarkovCopulaSpec {
  double marginal_nu = 4.0;
  std::variant<TCopula, GumbelCopula> copula;

  void validate() const {
    if (!(marginal_nu > 0.0)) throw DomainError("copula chain: marginal nu must be positive");
    if (const auto* t = std::get_if<TCopula>(&copula)) {
      if (!(t->nu > 0.0)) throw DomainError("t copula: nu must be positive");
      if (!(std::fabs(t->rho) < 1.0)) throw DomainError("t copula: |rho| must be < 1");
    } else if (!(std::get<GumbelCopula>(copula).theta >= 1.0)) {
      throw DomainError("Gumbel copula: theta must be >= 1");
    }
  }

  bool is_gumbel() const { return std::holds_alternative<GumbelCopula>(copula); }
};

/// Value x of a t_nu variable expressed as a = -log F(x), computed without
/// cancellation in either tail.
inline double t_to_neg_log_cdf(double nu, double x) {
  if (x > 0.0) return -std::log1p(-student_t_sf(nu, x));
  return -std::log(student_t_sf(nu, -x));
}

/// Inverse of t_to_neg_log_cdf: the x with F(x) = exp(-b).
inline double t_from_neg_log_cdf(double nu, double b) {
  if (b < std::numbers::ln2) return student_t_quantile_upper(nu, -std::expm1(-b));
  return -student_t_quantile_upper(nu, std::exp(-b));
}

/// Conditional draw for the Gumbel-Hougaard copula. With a = -log u and an
/// independent uniform w, returns b = -log v where v solves dC(u,v)/du = w.
///
/// Writing z = (a^theta + b^theta)^(1/theta) = a + d, the equation becomes
/// d + (theta - 1) log1p(d / a) = -log w, which is increasing and concave in
/// d >= 0; Newton from d = 0 converges monotonically from below.
inline double gumbel_conditional_neg_log(double theta, double a, double w) {
  const double target = -std::log(w);
  if (theta == 1.0) return target;
  const double k = theta - 1.0;
  double d = 0.0;
  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    const double g = d + k * std::log1p(d / a) - target;
    const double dg = 1.0 + k / (a + d);
    const double next = d - g / dg;
    const double step = next - d;
    d = next;
    if (std::fabs(step) <= 1e-12 * std::max(1.0, d)) {
      converged = true;
      break;
    }
  }
  if (!converged || !std::isfinite(d)) {
    // Bisection on [0, target]; g(0) <= 0 <= g(target).
    double lo = 0.0, hi = target;
    for (int iter = 0; iter < 2000 && hi - lo > 1e-12 * std::max(1.0, hi); ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid + k * std::log1p(mid / a) < target) lo = mid; else hi = mid;
    }
    d = 0.5 * (lo + hi);
    if (!std::isfinite(d)) throw GenerationError("Gumbel conditional inversion did not converge", -1);
  }
  const double z = a + d;
  const double l = std::log1p(d / a);
  return z * std::pow(-std::expm1(-theta * l), 1.0 / theta);
}

/// One transition of a copula chain with t_nu marginal: draws X_t given X_{t-1} = x.
inline double copula_chain_step(const MarkovCopulaSpec& spec, double x, Stream& stream) {
  const double nu = spec.marginal_nu;
  if (const auto* tc = std::get_if<TCopula>(&spec.copula)) {
    const double rho = tc->rho;
    const double nc = tc->nu;
    // Move to the copula's own t scale when it differs from the marginal.
    double y = x;
    if (nc != nu) y = x > 0.0 ? student_t_quantile_upper(nc, student_t_sf(nu, x))
                              : -student_t_quantile_upper(nc, student_t_sf(nu, -x));
    const double scale = std::sqrt((nc + y * y) * (1.0 - rho * rho) / (nc + 1.0));
    const double y_next = rho * y + scale * student_t_sample(nc + 1.0, stream);
    if (nc == nu) return y_next;
    return y_next > 0.0 ? student_t_quantile_upper(nu, student_t_sf(nc, y_next))
                        : -student_t_quantile_upper(nu, student_t_sf(nc, -y_next));
  }
  const double theta = std::get<GumbelCopula>(spec.copula).theta;
  const double a = t_to_neg_log_cdf(nu, x);
  const double b = gumbel_conditional_neg_log(theta, a, stream.uniform_open());
  return t_from_neg_log_cdf(nu, b);
}

/// Chain started exactly in the stationary t marginal, so no burn-in is used.
inline TimeSeries generate_markov_copula(const MarkovCopulaSpec& spec, const SeriesRequest& req, Stream& stream,
                                         std::string tag = "copula") {
  spec.validate();
  if (req.n < 1 || req.max_lag < 0) throw DomainError("generate: invalid series request");
  const std::int64_t total = req.n + 2 * req.max_lag;
  std::vector<double> out(static_cast<std::size_t>(total));
  double x = student_t_sample(spec.marginal_nu, stream);
  out[0] = x;
  for (std::int64_t t = 1; t < total; ++t) {
    x = copula_chain_step(spec, x, stream);
    if (!std::isfinite(x)) throw GenerationError("copula chain produced a non-finite value", t + 1 - req.max_lag);
    out[static_cast<std::size_t>(t)] = x;
  }
  return TimeSeries(std::move(out), req.max_lag, std::move(tag), stream.seed());
}

// ---------------------------------------------------------------------------
// Stochastic recurrence equations

struct SrePair {
  double c = 0.0;
  double d = 0.0;
};

/// X_t = C_t X_{t-1} + D_t with iid nonnegative pairs (C_t, D_t).
class SreSpec {
 public:
  using PairSampler = std::function<SrePair(Stream&)>;

  enum class Kind { LognormalExponential, DiscreteExponential, Custom };

  /// User-supplied pair law. Construction checks E[log C] < 0 and that
  /// log+ D has a finite sample mean.
  SreSpec(PairSampler sampler, std::string description, double initial_value = 0.0)
      : sampler_(std::move(sampler)), description_(std::move(description)), initial_value_(initial_value) {
    Stream s(0xBB67AE8584CAA73BULL);
    double log_c = 0.0, log_d = 0.0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) {
      const SrePair p = sampler_(s);
      if (p.c < 0.0 || p.d < 0.0) throw DomainError("SRE: C and D must be nonnegative");
      log_c += std::log(p.c);
      log_d += p.d > 1.0 ? std::log(p.d) : 0.0;
    }
    if (!(log_c / kDraws < 0.0)) throw DomainError("SRE: E[log C] must be negative");
    if (!std::isfinite(log_d)) throw DomainError("SRE: E[log+ D] must be finite");
  }

  /// log C ~ N(mu, sigma^2), D ~ Exponential(rate). Tail index -2 mu / sigma^2.
  static SreSpec lognormal_exponential(double mu, double sigma, double rate) {
    if (!(sigma > 0.0) || !(rate > 0.0)) throw DomainError("SRE: sigma and rate must be positive");
    SreSpec spec(
        [mu, sigma, rate](Stream& s) {
          const double c = std::exp(mu + sigma * s.normal());
          const double d = -std::log(s.uniform_open()) / rate;
          return SrePair{c, d};
        },
        "lognormal_exponential");
    spec.kind_ = Kind::LognormalExponential;
    spec.params_ = {mu, sigma, rate};
    return spec;
  }

  /// C uniform over a finite set of values with the given probabilities, D ~ Exponential(rate).
  static SreSpec discrete_exponential(std::vector<double> values, std::vector<double> probs, double rate) {
    if (values.empty() || values.size() != probs.size()) throw DomainError("SRE: values and probs must match");
    std::vector<double> cum(probs.size());
    std::partial_sum(probs.begin(), probs.end(), cum.begin());
    const double total = cum.back();
    for (double& c : cum) c /= total;
    SreSpec spec(
        [values, cum, rate](Stream& s) {
          const double u = s.uniform();
          std::size_t j = 0;
          while (j + 1 < cum.size() && u >= cum[j]) ++j;
          return SrePair{values[j], rate > 0.0 ? -std::log(s.uniform_open()) / rate : 0.0};
        },
        "discrete_exponential");
    spec.kind_ = Kind::DiscreteExponential;
    spec.params_ = {rate};
    spec.values_ = std::move(values);
    spec.probs_ = std::move(probs);
    return spec;
  }

  SrePair draw(Stream& s) const { return sampler_(s); }

  const std::string& description() const { return description_; }
  Kind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<double>& discrete_values() const { return values_; }
  const std::vector<double>& discrete_probs() const { return probs_; }

  double initial_value() const { return initial_value_; }
  SreSpec with_initial_value(double x0) const {
    SreSpec copy(*this);
    copy.initial_value_ = x0;
    return copy;
  }

  /// Closed-form tail index when the law of C admits one.
  std::optional<double> analytic_alpha() const {
    if (kind_ == Kind::LognormalExponential) return -2.0 * params_[0] / (params_[1] * params_[1]);
    return std::nullopt;
  }

 private:
  PairSampler sampler_;
  std::string description_;
  double initial_value_ = 0.0;
  Kind kind_ = Kind::Custom;
  std::vector<double> params_;
  std::vector<double> values_;
  std::vector<double> probs_;
};

inline TimeSeries generate_sre(const SreSpec& spec, const SeriesRequest& req, Stream& stream,
                               std::string tag = "sre") {
  if (req.n < 1 || req.max_lag < 0 || req.burn_in < 0) throw DomainError("generate: invalid series request");
  const std::int64_t total = req.n + 2 * req.max_lag;
  std::vector<double> out(static_cast<std::size_t>(total));
  double x = spec.initial_value();
  const std::int64_t steps = req.burn_in + total;
  for (std::int64_t t = 0; t < steps; ++t) {
    const SrePair p = spec.draw(stream);
    x = p.c * x + p.d;
    if (!std::isfinite(x)) throw GenerationError("SRE recursion overflowed", t - req.burn_in + 1 - req.max_lag);
    if (t >= req.burn_in) out[static_cast<std::size_t>(t - req.burn_in)] = x;
  }
  return TimeSeries(std::move(out), req.max_lag, std::move(tag), stream.seed());
}

// ---------------------------------------------------------------------------
// iid standard Pareto, a reference model with known tail and quantiles.

struct IidParetoSpec {
  double alpha = 1.0;
};

inline TimeSeries generate_iid_pareto(const IidParetoSpec& spec, const SeriesRequest& req, Stream& stream,
                                      std::string tag = "pareto") {
  if (req.n < 1 || req.max_lag < 0) throw DomainError("generate: invalid series request");
  std::vector<double> out(static_cast<std::size_t>(req.n + 2 * req.max_lag));
  for (double& x : out) x = sample_standard_pareto(spec.alpha, stream);
  return TimeSeries(std::move(out), req.max_lag, std::move(tag), stream.seed());
}

// ---------------------------------------------------------------------------
// Tagged union of all models.

using ModelParams = std::variant<GarchSpec, MarkovCopulaSpec, SreSpec, IidParetoSpec>;

struct ModelSpec {
  std::string name;
  ModelParams params;

  bool is_garch() const { return std::holds_alternative<GarchSpec>(params); }
  bool is_copula() const { return std::holds_alternative<MarkovCopulaSpec>(params); }
  bool is_sre() const { return std::holds_alternative<SreSpec>(params); }
  bool is_pareto() const { return std::holds_alternative<IidParetoSpec>(params); }
};

inline TimeSeries generate(const ModelSpec& model, const SeriesRequest& req, Stream& stream) {
  return std::visit(
      [&](const auto& p) -> TimeSeries {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GarchSpec>) return generate_garch(p, req, stream, model.name);
        else if constexpr (std::is_same_v<T, MarkovCopulaSpec>) return generate_markov_copula(p, req, stream, model.name);
        else if constexpr (std::is_same_v<T, SreSpec>) return generate_sre(p, req, stream, model.name);
        else return generate_iid_pareto(p, req, stream, model.name);
      },
      model.params);
}

/// GARCH(1,1) with alpha0 = 0.1, alpha1 = 0.14, beta1 = 0.84.
inline ModelSpec ngarch() { return {"nGARCH", GarchSpec(0.1, 0.14, 0.84, InnovationSpec::standard_normal())}; }
inline ModelSpec tgarch() { return {"tGARCH", GarchSpec(0.1, 0.14, 0.84, InnovationSpec::standardized_t(4.0))}; }

inline ModelSpec tcopula_model(double rho, double nu = 4.0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "tCopula_rho%.2f", rho);
  return {buf, MarkovCopulaSpec{nu, TCopula{nu, rho}}};
}

inline ModelSpec gumbel_model(double theta, double nu = 4.0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "gumCopula_theta%.1f", theta);
  return {buf, MarkovCopulaSpec{nu, GumbelCopula{theta}}};
}

/// The eight models of the simulation study.
inline std::vector<ModelSpec> default_models() {
  return {ngarch(),           tgarch(),           tcopula_model(0.25), tcopula_model(0.5),
          tcopula_model(0.75), gumbel_model(1.2), gumbel_model(1.5),   gumbel_model(2.0)};
}

}  // namespace spectail
