// Command-line front end: series generation, ground truths, single estimates
// and bootstrap intervals, the replicated study and diagnostics.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spectail/spectail.hpp"

namespace fs = std::filesystem;
using namespace spectail;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  unsigned jobs = 1;
};

void add_common(CLI::App* app, Common& c, bool with_config = false) {
  if (with_config) app->add_option("--config", c.config, "JSON study configuration");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--out", c.out, "output file or directory");
  app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  auto f = open_output(out);
  f << j.dump(2) << '\n';
}

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"std_error", e.std_error}}; }

// "os:<k>", "tq:<beta>" (needs a model) or "u:<level>".
ThresholdSpec parse_threshold(const std::string& s, const ModelSpec* model, const QuantileOptions& qopt) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw DomainError("threshold must look like os:<k>, tq:<beta> or u:<level>");
  const std::string tag = s.substr(0, colon), val = s.substr(colon + 1);
  if (tag == "os") return OrderStatistic{std::stoll(val)};
  if (tag == "u") return Deterministic{std::stod(val)};
  if (tag == "tq") {
    if (!model) throw DomainError("tq thresholds need --model to resolve the quantile");
    const double beta = std::stod(val);
    return QuantileLevel{beta, marginal_quantile(*model, beta, qopt).value};
  }
  throw DomainError("unknown threshold '" + tag + "'");
}

struct SeriesSource {
  std::string input;
  std::string model;
  std::int64_t n = 2000;
};

TimeSeries load_series(const SeriesSource& src, std::int64_t max_lag, std::uint64_t seed) {
  if (!src.input.empty()) return read_series_csv(src.input);
  if (src.model.empty()) throw DomainError("give --input <series.csv> or --model <name>");
  Stream s = derive_seed(seed, {src.model});
  return generate(model_from_name(src.model), {src.n, max_lag, 1000}, s);
}

json record_json(const EstimateRecord& r) {
  json j{{"kind", kind_name(r.kind)},
         {"threshold_mode", threshold_mode_name(r.threshold)},
         {"threshold_value", r.threshold_value},
         {"exceedances", r.exceedance_count}};
  if (r.kind == EstimatorKind::Hill) {
    j["alpha"] = r.estimate;
  } else {
    j["lag"] = r.lag;
    j["x"] = r.x;
    j["cdf"] = r.estimate;
    j["survival"] = r.survival();
    if (r.alpha_hat) j["alpha_hat"] = *r.alpha_hat;
  }
  return j;
}

void print_summary_table(const std::vector<QuerySummary>& rows) {
  std::printf("%-20s %-8s %3s %5s %5s %9s %9s %9s %8s %6s %4s %4s\n", "model", "kind", "t", "x", "beta", "mean_TQ",
              "mean_OS", "var_ratio", "KS", "pairs", "out", "miss");
  for (const auto& s : rows) {
    const auto& q = s.query;
    std::printf("%-20s %-8s %3lld %5.2f %5.3f %9.5f %9.5f %9s %8.4f %6zu %4lld %4lld\n", q.model.c_str(),
                kind_name(q.kind).c_str(), static_cast<long long>(q.lag), q.x, q.beta, s.mean_tq, s.mean_os,
                s.variance_ratio ? std::to_string(*s.variance_ratio).substr(0, 8).c_str() : "undef", s.ks,
                s.tq.size(), static_cast<long long>(s.outside_unit_tq + s.outside_unit_os),
                static_cast<long long>(s.missing_tq + s.missing_os));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimation of the spectral tail process: simulation, estimators and diagnostics"};
  app.require_subcommand(1);

  // generate
  Common gen_c;
  std::string gen_model = "nGARCH";
  std::int64_t gen_n = 2000, gen_lag = 5, gen_burn = 1000;
  auto* gen = app.add_subcommand("generate", "simulate one padded series and write index,value CSV");
  add_common(gen, gen_c);
  gen->add_option("--model", gen_model, "model name (nGARCH, tGARCH, tCopula_rho0.25, gumCopula_theta1.2, ...)");
  gen->add_option("--n", gen_n, "series length");
  gen->add_option("--max-lag", gen_lag, "padding on either side");
  gen->add_option("--burn-in", gen_burn, "discarded start-up steps");

  // truth
  Common tr_c;
  std::string tr_model = "nGARCH", tr_what = "spectral";
  std::vector<double> tr_levels{0.9, 0.95}, tr_xs{1.0, 0.5};
  std::int64_t tr_lag = 1, tr_nmc = 10'000'000, tr_m = 1'000'000, tr_reps = 20;
  auto* tr = app.add_subcommand("truth", "tail index, marginal quantiles, spectral truths, pre-asymptotic values");
  add_common(tr, tr_c);
  tr->add_option("--model", tr_model, "model name");
  tr->add_option("--what", tr_what, "tail-index | quantiles | spectral | preasymptotic")
      ->check(CLI::IsMember({"tail-index", "quantiles", "spectral", "preasymptotic"}));
  tr->add_option("--levels", tr_levels, "quantile levels beta");
  tr->add_option("--x", tr_xs, "arguments x");
  tr->add_option("--lag", tr_lag, "lag t");
  tr->add_option("--n-mc", tr_nmc, "Monte Carlo size for tail index and spectral truths");
  tr->add_option("--m", tr_m, "path length per repetition for quantiles and pre-asymptotics");
  tr->add_option("--reps", tr_reps, "repetitions for quantiles and pre-asymptotics");

  // estimate / bootstrap share their inputs
  Common es_c, bs_c;
  SeriesSource es_src, bs_src;
  std::string es_kind = "forward", bs_kind = "forward", es_thr = "os:200", bs_thr = "os:200";
  std::int64_t es_lag = 1, bs_lag = 1;
  double es_x = 1.0, bs_x = 1.0;
  auto* es = app.add_subcommand("estimate", "forward, backward or Hill estimate on one series");
  auto* bs = app.add_subcommand("bootstrap", "multiplier block bootstrap interval on one series");
  for (auto [cmd, c, src, kind, thr, lag, x] :
       {std::tuple{es, &es_c, &es_src, &es_kind, &es_thr, &es_lag, &es_x},
        std::tuple{bs, &bs_c, &bs_src, &bs_kind, &bs_thr, &bs_lag, &bs_x}}) {
    add_common(cmd, *c);
    cmd->add_option("--input", src->input, "series CSV written by `generate`");
    cmd->add_option("--model", src->model, "simulate from this model instead (also resolves tq thresholds)");
    cmd->add_option("--n", src->n, "series length when simulating");
    cmd->add_option("--kind", *kind, "forward | backward | hill")->check(CLI::IsMember({"forward", "backward", "hill"}));
    cmd->add_option("--threshold", *thr, "os:<k> | tq:<beta> | u:<level>");
    cmd->add_option("--lag", *lag, "lag t");
    cmd->add_option("--x", *x, "argument x");
  }
  std::int64_t bs_B = 1000, bs_block = 0;
  std::string bs_law = "rademacher";
  double bs_level = 0.95;
  bs->add_option("--replicates", bs_B, "bootstrap replicates");
  bs->add_option("--block-length", bs_block, "block length r (default ceil(k^0.4))");
  bs->add_option("--law", bs_law, "rademacher | uniform")->check(CLI::IsMember({"rademacher", "uniform"}));
  bs->add_option("--level", bs_level, "confidence level");

  // study
  auto* st = app.add_subcommand("study", "replicated simulation study");
  st->require_subcommand(1);
  Common run_c, rep_c;
  std::string run_cache;
  bool no_svg = false;
  auto* run = st->add_subcommand("run", "run the study and write CSV/SVG reports");
  add_common(run, run_c, true);
  run->add_option("--quantile-cache", run_cache, "JSON quantile cache (read, then updated)");
  run->add_flag("--no-svg", no_svg, "skip SVG figures");
  std::string rep_in;
  auto* rep = st->add_subcommand("report", "rebuild summaries and figures from an estimates CSV");
  add_common(rep, rep_c);
  rep->add_option("--in", rep_in, "estimates.csv of a previous run")->required();

  // diagnose
  Common dg_c;
  std::string dg_model = "nGARCH", dg_check = "cluster";
  std::int64_t dg_nmc = 1'000'000, dg_r = 10, dg_reps = 100;
  double dg_eps = 0.1, dg_xi = 0.5;
  std::vector<double> dg_levels{0.99, 0.995, 0.999};
  std::vector<std::int64_t> dg_ngrid{1000, 4000, 16000};
  auto* dg = app.add_subcommand("diagnose", "numerical checks of the limit theory");
  add_common(dg, dg_c);
  dg->add_option("--model", dg_model, "model name (sre_lognormal for the SRE checks)");
  dg->add_option("--check", dg_check, "cluster | os-consistency | sre | covariance")
      ->check(CLI::IsMember({"cluster", "os-consistency", "sre", "covariance"}));
  dg->add_option("--n-mc", dg_nmc, "Monte Carlo size");
  dg->add_option("--r", dg_r, "block length / lag horizon");
  dg->add_option("--epsilon", dg_eps, "threshold slack");
  dg->add_option("--xi", dg_xi, "moment order for the SRE constant");
  dg->add_option("--levels", dg_levels, "quantile levels for the cluster check");
  dg->add_option("--n-grid", dg_ngrid, "sample sizes for the order statistic check (k = sqrt(n))");
  dg->add_option("--reps", dg_reps, "repetitions for the order statistic check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      Stream s = derive_seed(gen_c.seed, {gen_model});
      const TimeSeries ts = generate(model_from_name(gen_model), {gen_n, gen_lag, gen_burn}, s);
      write_series_csv(gen_c.out.empty() ? gen_model + ".csv" : gen_c.out, ts);
      std::cerr << "wrote " << ts.n() << " values (+" << 2 * gen_lag << " padding), checksum " << ts.checksum()
                << '\n';
    } else if (tr->parsed()) {
      const ModelSpec model = model_from_name(tr_model);
      json j{{"model", model.name}};
      if (tr_what == "tail-index") {
        if (const auto* g = std::get_if<GarchSpec>(&model.params)) {
          const auto r = garch_tail_index(*g, tr_nmc, 1e-10, tr_c.seed);
          j["alpha"] = r.alpha;
          j["std_error"] = r.mc_std_error;
          j["residual"] = r.residual;
        } else {
          j["alpha"] = model_tail_index(model, tr_nmc);
        }
      } else if (tr_what == "quantiles") {
        QuantileOptions o{tr_m, tr_reps, tr_c.seed, tr_c.jobs};
        for (const auto& q : marginal_quantiles(model, tr_levels, o))
          j["quantiles"].push_back({{"beta", q.beta}, {"value", q.value}, {"std_error", q.std_error},
                                    {"analytic", q.analytic}});
      } else if (tr_what == "spectral") {
        j["lag"] = tr_lag;
        if (const auto* g = std::get_if<GarchSpec>(&model.params)) {
          const double alpha = garch_tail_index(*g, tr_nmc, 1e-10, tr_c.seed).alpha;
          const auto est = spectral_survival_garch(*g, tr_lag, tr_xs, alpha, {tr_nmc, tr_c.seed, tr_c.jobs});
          for (std::size_t i = 0; i < tr_xs.size(); ++i)
            j["survival"].push_back({{"x", tr_xs[i]}, {"estimate", estimate_json(est[i])}});
        } else if (const auto* c = std::get_if<MarkovCopulaSpec>(&model.params)) {
          if (const auto* t = std::get_if<TCopula>(&c->copula)) {
            for (double x : tr_xs) {
              const auto e = spectral_survival_tcopula(t->nu, t->rho, tr_lag, x, {tr_nmc, tr_c.seed, tr_c.jobs});
              j["survival"].push_back({{"x", x}, {"estimate", estimate_json(e)}});
            }
          } else {
            ExtrapolationOptions o;
            o.seed = tr_c.seed;
            o.jobs = tr_c.jobs;
            for (const auto& e : spectral_survival_extrapolated(*c, tr_lag, tr_xs, o)) {
              j["survival"].push_back({{"x", e.x},
                                       {"estimate", estimate_json(e.estimate)},
                                       {"spread", e.spread},
                                       {"converged", e.converged}});
              if (!e.warning.empty()) std::cerr << "warning: " << e.warning << '\n';
            }
          }
        } else {
          throw UnsupportedError("spectral truths are available for GARCH and copula models");
        }
      } else {
        QuantileOptions qo{tr_m, tr_reps, tr_c.seed, tr_c.jobs};
        std::vector<double> thresholds;
        for (const auto& q : marginal_quantiles(model, tr_levels, qo)) thresholds.push_back(q.value);
        PreasymptoticOptions po;
        po.m = tr_m;
        po.reps = tr_reps;
        po.seed = tr_c.seed;
        po.jobs = tr_c.jobs;
        for (const auto& r : preasymptotic(model, tr_levels, thresholds, tr_lag, tr_xs, po)) {
          json row{{"beta", r.beta}, {"threshold", r.threshold}, {"a", estimate_json(r.a)}};
          for (std::size_t i = 0; i < r.xs.size(); ++i)
            row["x"].push_back({{"x", r.xs[i]}, {"p", estimate_json(r.p[i])}, {"e", estimate_json(r.e[i])}});
          j["preasymptotic"].push_back(row);
        }
      }
      emit(j, tr_c.out);
    } else if (es->parsed() || bs->parsed()) {
      const bool boot = bs->parsed();
      const Common& c = boot ? bs_c : es_c;
      const SeriesSource& src = boot ? bs_src : es_src;
      const EstimatorKind kind = parse_kind(boot ? bs_kind : es_kind);
      const std::int64_t lag = boot ? bs_lag : es_lag;
      const double x = boot ? bs_x : es_x;
      const TimeSeries ts = load_series(src, std::max<std::int64_t>(1, std::llabs(lag)), c.seed);
      std::optional<ModelSpec> model;
      if (!src.model.empty()) model = model_from_name(src.model);
      QuantileOptions qo;
      qo.seed = c.seed;
      qo.jobs = c.jobs;
      const ThresholdSpec thr = parse_threshold(boot ? bs_thr : es_thr, model ? &*model : nullptr, qo);
      if (!boot) {
        emit(record_json(estimate(kind, ts, lag, x, resolve_threshold(ts, thr))), c.out);
      } else {
        MultiplierSpec m;
        m.law = bs_law == "uniform" ? MultiplierSpec::Law::UniformSymmetric : MultiplierSpec::Law::Rademacher;
        m.replicates = bs_B;
        if (bs_block > 0) m.block_length = bs_block;
        Stream s = derive_seed(c.seed, {std::string("bootstrap")});
        const auto r = bootstrap_ci(ts, kind, lag, x, thr, m, bs_level, s);
        json j = record_json(r.point);
        j["interval"] = {{"level", r.ci.level}, {"lower", r.ci.lower}, {"upper", r.ci.upper},
                         {"quantity", kind == EstimatorKind::Hill ? "alpha" : "cdf"}};
        j["block_length"] = r.block_length;
        j["replicates"] = r.replicates.size();
        j["degenerate"] = r.degenerate_count;
        emit(j, c.out);
      }
    } else if (run->parsed()) {
      StudyConfig config = run_c.config.empty() ? StudyConfig{} : load_config(run_c.config);
      if (run->count("--seed")) config.master_seed = run_c.seed;
      if (run->count("--jobs")) config.jobs = run_c.jobs;
      if (!run_c.out.empty()) config.output_dir = run_c.out;
      if (!run_cache.empty()) config.quantile_cache = run_cache;
      QuantileCache cache;
      if (!config.quantile_cache.empty()) cache = load_quantile_cache(config.quantile_cache);
      const auto t0 = std::chrono::steady_clock::now();
      const StudyResult result = run_study(config, cache);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!config.quantile_cache.empty()) save_quantile_cache(config.quantile_cache, cache);
      const fs::path dir = config.output_dir;
      const auto rows = emit_report(result, dir, {true, !no_svg});
      save_quantile_cache(dir / "quantiles.json", cache);
      auto cf = open_output(dir / "config.json");
      cf << config_to_json(config).dump(2) << '\n';
      print_summary_table(rows);
      std::cerr << result.records.size() << " records in " << secs << " s, written to " << dir.string() << '\n';
    } else if (rep->parsed()) {
      StudyResult result;
      result.records = read_estimates_csv(rep_in);
      const fs::path dir = rep_c.out.empty() ? fs::path(rep_in).parent_path() / "report" : fs::path(rep_c.out);
      print_summary_table(emit_report(result, dir));
    } else if (dg->parsed()) {
      json j{{"check", dg_check}};
      auto report_json = [](const ConditionReport& r) {
        return json{{"name", r.name}, {"grid", r.grid},       {"values", r.values},
                    {"std_errors", r.std_errors}, {"exponent", r.exponent}, {"verdict", verdict_name(r.verdict)},
                    {"rule", r.rule}};
      };
      if (dg_check == "cluster") {
        ClusterMomentOptions o;
        o.n_mc = dg_nmc;
        o.seed = dg_c.seed;
        j["report"] = report_json(cluster_moment_check(model_from_name(dg_model), dg_levels, dg_r, dg_eps, o));
      } else if (dg_check == "os-consistency") {
        OsConsistencyOptions o;
        o.reps = dg_reps;
        o.seed = dg_c.seed;
        o.jobs = dg_c.jobs;
        o.quantiles.jobs = dg_c.jobs;
        const auto k_rule = [](std::int64_t n) {
          return static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(n))));
        };
        j["report"] = report_json(os_consistency_check(model_from_name(dg_model), dg_ngrid, k_rule, o));
      } else if (dg_check == "sre") {
        const ModelSpec m = model_from_name(dg_model);
        const auto* spec = std::get_if<SreSpec>(&m.params);
        if (!spec) throw DomainError("the sre check needs an SRE model, e.g. sre_lognormal");
        SreDiagnosticsOptions o;
        o.n_mc = dg_nmc;
        o.seed = dg_c.seed;
        o.epsilon = dg_eps;
        const auto d = sre_condition_diagnostics(*spec, dg_xi, dg_r, o);
        j["rho"] = estimate_json(d.rho);
        j["alpha"] = d.alpha;
        j["p"] = d.p;
        j["p_tilde"] = d.p_tilde;
        j["decay"] = report_json(d.decay);
        j["power_sum"] = report_json(d.power_sum);
        j["verdict"] = verdict_name(d.verdict);
      } else {
        const ModelSpec m = model_from_name(dg_model);
        TailProcessSampler sampler = [&]() {
          if (const auto* g = std::get_if<GarchSpec>(&m.params))
            return garch_tail_chain(*g, garch_tail_index(*g).alpha, dg_r);
          if (const auto* c = std::get_if<MarkovCopulaSpec>(&m.params)) {
            if (const auto* t = std::get_if<TCopula>(&c->copula)) return tcopula_tail_chain(t->nu, t->rho, dg_r);
          }
          throw UnsupportedError("covariance series need a GARCH or t-copula model");
        }();
        const McOptions o{dg_nmc, dg_c.seed, dg_c.jobs};
        j["var_phi1"] = estimate_json(limit_covariance_mc(sampler, PhiSpec::phi1(), PhiSpec::phi1(), o));
        j["cov_phi1_phi0"] = estimate_json(limit_covariance_mc(sampler, PhiSpec::phi1(), PhiSpec::phi0(), o));
        j["var_phi2"] = estimate_json(limit_covariance_mc(sampler, PhiSpec::phi2(1, 1.0), PhiSpec::phi2(1, 1.0), o));
      }
      emit(j, dg_c.out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
