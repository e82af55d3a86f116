#pragma once

// Replicated simulation study: every replicate is one generated series on
// which all (level, threshold mode, estimator, lag, x) combinations are
// evaluated, so that TQ and OS estimates are paired.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "spectail/bootstrap.hpp"
#include "spectail/error.hpp"
#include "spectail/estimators.hpp"
#include "spectail/models.hpp"
#include "spectail/parallel.hpp"
#include "spectail/random.hpp"
#include "spectail/stats.hpp"
#include "spectail/truth.hpp"

namespace spectail {

enum class ThresholdMode { TQ, OS };

inline std::string mode_name(ThresholdMode m) { return m == ThresholdMode::TQ ? "TQ" : "OS"; }

inline ThresholdMode parse_mode(const std::string& s) {
  if (s == "TQ") return ThresholdMode::TQ;
  if (s == "OS") return ThresholdMode::OS;
  throw DomainError("unknown threshold mode '" + s + "'");
}

struct BootstrapSettings {
  MultiplierSpec multiplier;
  double level = 0.95;
};

struct StudyConfig {
  std::vector<ModelSpec> models = default_models();
  std::int64_t n = 2000;
  std::int64_t replications = 1000;
  std::vector<double> levels = {0.9, 0.95};
  std::vector<std::int64_t> lags = {1, 3, 5};
  std::vector<double> arguments = {0.5, 1.0};
  std::vector<EstimatorKind> kinds = {EstimatorKind::Forward, EstimatorKind::Backward};
  std::vector<ThresholdMode> modes = {ThresholdMode::TQ, ThresholdMode::OS};
  std::optional<BootstrapSettings> bootstrap;
  std::uint64_t master_seed = 1;
  std::string output_dir = "study_out";
  unsigned jobs = 1;
  std::int64_t burn_in = 1000;
  // Monte Carlo quantiles for models without a closed form.
  std::int64_t quantile_m = 1'000'000;
  std::int64_t quantile_reps = 20;
  std::string quantile_cache;  // JSON file; empty for none

  void validate() const {
    if (models.empty()) throw DomainError("study: no models");
    if (n < 2) throw DomainError("study: n must be >= 2");
    if (replications < 2) throw DomainError("study: need at least two replications");
    if (levels.empty() || lags.empty() || arguments.empty() || kinds.empty() || modes.empty())
      throw DomainError("study: empty query grid");
    for (double b : levels) {
      if (!(b > 0.0 && b < 1.0)) throw DomainError("study: levels must lie in (0,1)");
      const auto k = os_k(b);
      if (k < 1 || k >= n) throw DomainError("study: level leaves no usable order statistic");
    }
    for (auto t : lags) {
      if (t == 0) throw DomainError("study: lags must be nonzero");
    }
  }

  /// k = round(n (1 - beta)) for the OS threshold at level beta.
  std::int64_t os_k(double beta) const {
    return static_cast<std::int64_t>(std::llround(static_cast<double>(n) * (1.0 - beta)));
  }

  std::int64_t max_lag() const {
    std::int64_t m = 1;
    for (auto t : lags) m = std::max<std::int64_t>(m, std::llabs(t));
    return m;
  }
};

/// One estimate. `estimate` is the estimated P{Theta_t > x} (alpha for Hill);
/// NaN marks a replicate without exceedances.
struct StudyRecord {
  std::string model;
  std::int64_t replicate = 0;
  EstimatorKind kind = EstimatorKind::Forward;
  std::int64_t lag = 0;
  double x = 0.0;
  double beta = 0.0;
  ThresholdMode mode = ThresholdMode::TQ;
  double threshold_value = 0.0;
  std::int64_t exceedances = 0;
  double alpha_hat = std::numeric_limits<double>::quiet_NaN();
  double estimate = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t series_checksum = 0;

  bool missing() const { return std::isnan(estimate); }
};

struct BootstrapRecord {
  std::string model;
  std::int64_t replicate = 0;
  EstimatorKind kind = EstimatorKind::Forward;
  std::int64_t lag = 0;
  double x = 0.0;
  double beta = 0.0;
  ThresholdMode mode = ThresholdMode::TQ;
  double lower = std::numeric_limits<double>::quiet_NaN();  // interval for P{Theta_t > x}
  double upper = std::numeric_limits<double>::quiet_NaN();
  std::int64_t degenerate = 0;
};

struct StudyResult {
  std::vector<StudyRecord> records;
  std::vector<BootstrapRecord> bootstrap;
  std::map<std::string, std::vector<QuantileEstimate>> quantiles;  // per model, in level order
};

// ---------------------------------------------------------------------------
// Quantiles

/// Quantiles keyed by (model, beta); entries hold their own standard error.
class QuantileCache {
 public:
  std::optional<QuantileEstimate> find(const std::string& model, double beta) const {
    auto it = entries_.find({model, beta});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  void put(const std::string& model, const QuantileEstimate& q) { entries_[{model, q.beta}] = q; }
  const std::map<std::pair<std::string, double>, QuantileEstimate>& entries() const { return entries_; }

 private:
  std::map<std::pair<std::string, double>, QuantileEstimate> entries_;
};

/// Fills the cache for every model and level of the config that is missing.
inline void resolve_quantiles(const StudyConfig& config, QuantileCache& cache) {
  for (const auto& model : config.models) {
    std::vector<double> missing;
    for (double b : config.levels) {
      if (!cache.find(model.name, b)) missing.push_back(b);
    }
    if (missing.empty()) continue;
    QuantileOptions opt;
    opt.m = config.quantile_m;
    opt.reps = config.quantile_reps;
    opt.seed = mix_seed(config.master_seed, {std::string("quantiles")});
    opt.jobs = config.jobs;
    opt.burn_in = config.burn_in;
    for (const auto& q : marginal_quantiles(model, missing, opt)) cache.put(model.name, q);
  }
}

// ---------------------------------------------------------------------------
// Running

inline Stream replicate_stream(std::uint64_t master, const std::string& model, std::int64_t replicate) {
  return derive_seed(master, {model, static_cast<std::uint64_t>(replicate)});
}

namespace detail {

inline void evaluate_replicate(const StudyConfig& config, const ModelSpec& model, std::int64_t r,
                               const std::vector<double>& tq, std::vector<StudyRecord>& out,
                               std::vector<BootstrapRecord>& boot) {
  Stream stream = replicate_stream(config.master_seed, model.name, r);
  const TimeSeries series = generate(model, {config.n, config.max_lag(), config.burn_in}, stream);
  const std::uint64_t checksum = series.checksum();
  for (std::size_t b = 0; b < config.levels.size(); ++b) {
    const double beta = config.levels[b];
    for (ThresholdMode mode : config.modes) {
      const ThresholdSpec spec = mode == ThresholdMode::TQ ? ThresholdSpec{QuantileLevel{beta, tq[b]}}
                                                           : ThresholdSpec{OrderStatistic{config.os_k(beta)}};
      const ExceedanceSet exc = resolve_threshold(series, spec);
      const std::optional<double> alpha =
          exc.empty() ? std::nullopt : std::optional<double>(hill_alpha(series, exc));
      for (EstimatorKind kind : config.kinds) {
        const bool hill = kind == EstimatorKind::Hill;
        for (std::int64_t t : config.lags) {
          for (double x : config.arguments) {
            if (hill && (t != config.lags.front() || x != config.arguments.front())) continue;
            StudyRecord rec;
            rec.model = model.name;
            rec.replicate = r;
            rec.kind = kind;
            rec.lag = hill ? 0 : t;
            rec.x = hill ? 0.0 : x;
            rec.beta = beta;
            rec.mode = mode;
            rec.threshold_value = exc.threshold_value;
            rec.exceedances = exc.count();
            rec.series_checksum = checksum;
            if (alpha) {
              if (kind != EstimatorKind::Forward) rec.alpha_hat = *alpha;
              const EstimateRecord e = estimate(kind, series, t, x, exc, alpha);
              rec.estimate = hill ? e.estimate : e.survival();
            }
            out.push_back(rec);
            if (config.bootstrap && !hill && alpha) {
              BootstrapRecord br{model.name, r, kind, t, x, beta, mode};
              Stream bs = derive_seed(config.master_seed,
                                      {std::string("bootstrap"), model.name, static_cast<std::uint64_t>(r),
                                       kind_name(kind), static_cast<std::uint64_t>(t + 1000), std::to_string(x),
                                       std::to_string(beta), mode_name(mode)});
              try {
                const auto res = bootstrap_ci(series, kind, t, x, spec, config.bootstrap->multiplier,
                                              config.bootstrap->level, bs);
                br.lower = 1.0 - res.ci.upper;
                br.upper = 1.0 - res.ci.lower;
                br.degenerate = res.degenerate_count;
              } catch (const UnreliableIntervalError&) {
                br.degenerate = config.bootstrap->multiplier.replicates;
              }
              boot.push_back(br);
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Runs every model and replicate of the config. TQ thresholds come from the
/// cache (filled as needed). Output order is model, replicate, level, mode,
/// kind, lag, x regardless of the number of jobs.
inline StudyResult run_study(const StudyConfig& config, QuantileCache& cache) {
  config.validate();
  const bool need_tq = std::find(config.modes.begin(), config.modes.end(), ThresholdMode::TQ) != config.modes.end();
  if (need_tq) resolve_quantiles(config, cache);
  StudyResult result;
  for (const auto& model : config.models) {
    std::vector<double> tq(config.levels.size(), 0.0);
    if (need_tq) {
      auto& qs = result.quantiles[model.name];
      for (std::size_t b = 0; b < config.levels.size(); ++b) {
        const auto q = *cache.find(model.name, config.levels[b]);
        tq[b] = q.value;
        qs.push_back(q);
      }
    }
    const auto reps = static_cast<std::size_t>(config.replications);
    std::vector<std::vector<StudyRecord>> per(reps);
    std::vector<std::vector<BootstrapRecord>> per_boot(reps);
    parallel_for(reps, config.jobs, [&](std::size_t r) {
      detail::evaluate_replicate(config, model, static_cast<std::int64_t>(r), tq, per[r], per_boot[r]);
    });
    for (std::size_t r = 0; r < reps; ++r) {
      result.records.insert(result.records.end(), per[r].begin(), per[r].end());
      result.bootstrap.insert(result.bootstrap.end(), per_boot[r].begin(), per_boot[r].end());
    }
  }
  return result;
}

inline StudyResult run_study(const StudyConfig& config) {
  QuantileCache cache;
  return run_study(config, cache);
}

// ---------------------------------------------------------------------------
// Summaries

struct SummaryQuery {
  std::string model;
  EstimatorKind kind = EstimatorKind::Forward;
  std::int64_t lag = 1;
  double x = 0.5;
  double beta = 0.9;
};

struct EcdfPoint {
  double value = 0.0;
  double cum_fraction = 0.0;
};

struct QuerySummary {
  SummaryQuery query;
  std::vector<double> tq;  // paired, replicate order, missing pairs removed
  std::vector<double> os;
  std::vector<double> tq_sorted;
  std::vector<double> os_sorted;
  std::vector<EcdfPoint> ecdf_tq;
  std::vector<EcdfPoint> ecdf_os;
  double mean_tq = 0.0, sd_tq = 0.0, mean_os = 0.0, sd_os = 0.0;
  std::optional<double> variance_ratio;  // var(TQ - OS) / var(TQ); none when undefined
  double ks = 0.0;                       // two-sample KS between TQ and OS
  std::int64_t outside_unit_tq = 0, outside_unit_os = 0;
  std::int64_t missing_tq = 0, missing_os = 0;
};

/// Step points of the empirical cdf: one point per distinct value.
inline std::vector<EcdfPoint> ecdf_points(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<EcdfPoint> out;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.push_back({v[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

/// var(tq - os) / var(tq); none when var(tq) is zero.
inline std::optional<double> variance_ratio(const std::vector<double>& tq, const std::vector<double>& os) {
  if (tq.size() != os.size() || tq.size() < 2) return std::nullopt;
  std::vector<double> d(tq.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = tq[i] - os[i];
  const double vt = stats::variance(tq);
  if (!(vt > 0.0)) return std::nullopt;
  return stats::variance(d) / vt;
}

inline QuerySummary summarize(const StudyResult& result, const SummaryQuery& q) {
  std::map<std::int64_t, std::pair<double, double>> pairs;  // replicate -> (tq, os)
  QuerySummary s;
  s.query = q;
  bool any = false;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : result.records) {
    if (r.model != q.model || r.kind != q.kind || r.beta != q.beta) continue;
    if (q.kind != EstimatorKind::Hill && (r.lag != q.lag || r.x != q.x)) continue;
    any = true;
    auto& p = pairs.try_emplace(r.replicate, nan, nan).first->second;
    (r.mode == ThresholdMode::TQ ? p.first : p.second) = r.estimate;
  }
  if (!any) throw DomainError("summarize: no records match the query");
  for (const auto& [rep, p] : pairs) {
    if (std::isnan(p.first)) ++s.missing_tq;
    if (std::isnan(p.second)) ++s.missing_os;
    if (!std::isnan(p.first) && (p.first < 0.0 || p.first > 1.0)) ++s.outside_unit_tq;
    if (!std::isnan(p.second) && (p.second < 0.0 || p.second > 1.0)) ++s.outside_unit_os;
    if (std::isnan(p.first) || std::isnan(p.second)) continue;
    s.tq.push_back(p.first);
    s.os.push_back(p.second);
  }
  if (q.kind == EstimatorKind::Hill) s.outside_unit_tq = s.outside_unit_os = 0;
  s.tq_sorted = s.tq;
  s.os_sorted = s.os;
  std::sort(s.tq_sorted.begin(), s.tq_sorted.end());
  std::sort(s.os_sorted.begin(), s.os_sorted.end());
  s.ecdf_tq = ecdf_points(s.tq);
  s.ecdf_os = ecdf_points(s.os);
  if (!s.tq.empty()) {
    s.mean_tq = stats::mean(s.tq);
    s.mean_os = stats::mean(s.os);
    s.sd_tq = stats::sd(s.tq);
    s.sd_os = stats::sd(s.os);
    s.ks = stats::ks_two_sample(s.tq, s.os);
  }
  s.variance_ratio = variance_ratio(s.tq, s.os);
  return s;
}

/// All distinct queries present in a result, in a stable order.
inline std::vector<SummaryQuery> study_queries(const StudyResult& result) {
  std::vector<std::tuple<std::string, int, std::int64_t, double, double>> keys;
  for (const auto& r : result.records) keys.emplace_back(r.model, static_cast<int>(r.kind), r.lag, r.x, r.beta);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<SummaryQuery> out;
  for (const auto& [m, k, t, x, b] : keys) out.push_back({m, static_cast<EstimatorKind>(k), t, x, b});
  return out;
}

}  // namespace spectail
