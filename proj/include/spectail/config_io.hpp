#pragma once

// JSON study configurations and quantile caches. Keys mirror StudyConfig
// field names. Models are given by name (see model_from_name) or as objects
// with a "type" key.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spectail/error.hpp"
#include "spectail/models.hpp"
#include "spectail/report.hpp"
#include "spectail/study.hpp"

namespace spectail {

using json = nlohmann::json;

namespace detail {

inline bool strip_prefix(const std::string& s, const std::string& prefix, double& value) {
  if (s.rfind(prefix, 0) != 0) return false;
  const std::string rest = s.substr(prefix.size());
  char* end = nullptr;
  value = std::strtod(rest.c_str(), &end);
  return !rest.empty() && end && *end == '\0';
}

}  // namespace detail

/// nGARCH, tGARCH, tCopula_rho<r>, gumCopula_theta<t>, sre_lognormal
/// (log C ~ N(-0.5, 1), D ~ Exp(1)) and pareto_alpha<a>.
inline ModelSpec model_from_name(const std::string& name) {
  double v = 0.0;
  if (name == "nGARCH") return ngarch();
  if (name == "tGARCH") return tgarch();
  if (detail::strip_prefix(name, "tCopula_rho", v)) return tcopula_model(v);
  if (detail::strip_prefix(name, "gumCopula_theta", v)) return gumbel_model(v);
  if (name == "sre_lognormal") return {name, SreSpec::lognormal_exponential(-0.5, 1.0, 1.0)};
  if (detail::strip_prefix(name, "pareto_alpha", v)) {
    if (!(v > 0.0)) throw DomainError("pareto model needs a positive alpha");
    return {name, IidParetoSpec{v}};
  }
  throw DomainError("unknown model '" + name + "'");
}

inline InnovationSpec innovation_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "normal") return InnovationSpec::standard_normal();
  if (j.is_object() && j.contains("t")) return InnovationSpec::standardized_t(j.at("t").get<double>());
  throw DomainError("innovation must be \"normal\" or {\"t\": nu}");
}

inline ModelSpec model_from_json(const json& j) {
  if (j.is_string()) return model_from_name(j.get<std::string>());
  if (!j.is_object() || !j.contains("type")) throw DomainError("model entry must be a name or an object with a type");
  const std::string type = j.at("type").get<std::string>();
  ModelSpec m = [&]() -> ModelSpec {
    if (type == "garch") {
      return {"garch",
              GarchSpec(j.value("alpha0", 0.1), j.value("alpha1", 0.14), j.value("beta1", 0.84),
                        j.contains("innovation") ? innovation_from_json(j.at("innovation"))
                                                 : InnovationSpec::standard_normal())};
    }
    if (type == "tcopula") return tcopula_model(j.at("rho").get<double>(), j.value("nu", 4.0));
    if (type == "gumbel") return gumbel_model(j.at("theta").get<double>(), j.value("nu", 4.0));
    if (type == "sre_lognormal") {
      return {"sre_lognormal",
              SreSpec::lognormal_exponential(j.value("mu", -0.5), j.value("sigma", 1.0), j.value("rate", 1.0))};
    }
    if (type == "sre_discrete") {
      return {"sre_discrete",
              SreSpec::discrete_exponential(j.at("values").get<std::vector<double>>(),
                                            j.at("probs").get<std::vector<double>>(), j.value("rate", 1.0))};
    }
    if (type == "pareto") return {"pareto", IidParetoSpec{j.at("alpha").get<double>()}};
    throw DomainError("unknown model type '" + type + "'");
  }();
  if (const auto* c = std::get_if<MarkovCopulaSpec>(&m.params)) c->validate();
  if (j.contains("name")) m.name = j.at("name").get<std::string>();
  return m;
}

inline MultiplierSpec::Law parse_law(const std::string& s) {
  if (s == "rademacher") return MultiplierSpec::Law::Rademacher;
  if (s == "uniform") return MultiplierSpec::Law::UniformSymmetric;
  if (s == "zero") return MultiplierSpec::Law::Zero;
  throw DomainError("unknown multiplier law '" + s + "'");
}

inline std::string law_name(MultiplierSpec::Law l) {
  switch (l) {
    case MultiplierSpec::Law::Rademacher: return "rademacher";
    case MultiplierSpec::Law::UniformSymmetric: return "uniform";
    case MultiplierSpec::Law::Zero: return "zero";
  }
  return "?";
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline StudyConfig config_from_json(const json& j) {
  static const std::vector<std::string> known = {
      "models",      "n",      "replications", "levels",     "lags",          "arguments",     "kinds",  "modes",
      "bootstrap",   "master_seed", "output_dir", "jobs",      "burn_in",       "quantile_m",    "quantile_reps",
      "quantile_cache"};
  if (!j.is_object()) throw DomainError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw DomainError("unknown config key '" + key + "'");
  }
  StudyConfig c;
  if (j.contains("models")) {
    c.models.clear();
    for (const auto& m : j.at("models")) c.models.push_back(model_from_json(m));
  }
  if (j.contains("n")) c.n = j.at("n").get<std::int64_t>();
  if (j.contains("replications")) c.replications = j.at("replications").get<std::int64_t>();
  if (j.contains("levels")) c.levels = j.at("levels").get<std::vector<double>>();
  if (j.contains("lags")) c.lags = j.at("lags").get<std::vector<std::int64_t>>();
  if (j.contains("arguments")) c.arguments = j.at("arguments").get<std::vector<double>>();
  if (j.contains("kinds")) {
    c.kinds.clear();
    for (const auto& k : j.at("kinds")) c.kinds.push_back(parse_kind(k.get<std::string>()));
  }
  if (j.contains("modes")) {
    c.modes.clear();
    for (const auto& m : j.at("modes")) c.modes.push_back(parse_mode(m.get<std::string>()));
  }
  if (j.contains("bootstrap") && !j.at("bootstrap").is_null()) {
    const auto& b = j.at("bootstrap");
    BootstrapSettings s;
    if (b.contains("law")) s.multiplier.law = parse_law(b.at("law").get<std::string>());
    if (b.contains("replicates")) s.multiplier.replicates = b.at("replicates").get<std::int64_t>();
    if (b.contains("block_length") && !b.at("block_length").is_null())
      s.multiplier.block_length = b.at("block_length").get<std::int64_t>();
    if (b.contains("level")) s.level = b.at("level").get<double>();
    s.multiplier.validate();
    c.bootstrap = s;
  }
  if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("jobs")) c.jobs = j.at("jobs").get<unsigned>();
  if (j.contains("burn_in")) c.burn_in = j.at("burn_in").get<std::int64_t>();
  if (j.contains("quantile_m")) c.quantile_m = j.at("quantile_m").get<std::int64_t>();
  if (j.contains("quantile_reps")) c.quantile_reps = j.at("quantile_reps").get<std::int64_t>();
  if (j.contains("quantile_cache")) c.quantile_cache = j.at("quantile_cache").get<std::string>();
  c.validate();
  return c;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline StudyConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json_file(path)); }

/// Model names only; models built from objects are written by name as well.
inline json config_to_json(const StudyConfig& c) {
  json j;
  j["models"] = json::array();
  for (const auto& m : c.models) j["models"].push_back(m.name);
  j["n"] = c.n;
  j["replications"] = c.replications;
  j["levels"] = c.levels;
  j["lags"] = c.lags;
  j["arguments"] = c.arguments;
  j["kinds"] = json::array();
  for (auto k : c.kinds) j["kinds"].push_back(kind_name(k));
  j["modes"] = json::array();
  for (auto m : c.modes) j["modes"].push_back(mode_name(m));
  if (c.bootstrap) {
    j["bootstrap"] = {{"law", law_name(c.bootstrap->multiplier.law)},
                      {"replicates", c.bootstrap->multiplier.replicates},
                      {"level", c.bootstrap->level}};
    if (c.bootstrap->multiplier.block_length) j["bootstrap"]["block_length"] = *c.bootstrap->multiplier.block_length;
  } else {
    j["bootstrap"] = nullptr;
  }
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  j["jobs"] = c.jobs;
  j["burn_in"] = c.burn_in;
  j["quantile_m"] = c.quantile_m;
  j["quantile_reps"] = c.quantile_reps;
  j["quantile_cache"] = c.quantile_cache;
  return j;
}

// ---------------------------------------------------------------------------
// Quantile cache files

inline json quantile_cache_to_json(const QuantileCache& cache) {
  json entries = json::array();
  for (const auto& [key, q] : cache.entries()) {
    entries.push_back({{"model", key.first},
                       {"beta", q.beta},
                       {"value", q.value},
                       {"std_error", q.std_error},
                       {"analytic", q.analytic}});
  }
  return {{"quantiles", entries}};
}

inline QuantileCache quantile_cache_from_json(const json& j) {
  QuantileCache cache;
  for (const auto& e : j.at("quantiles")) {
    QuantileEstimate q;
    q.beta = e.at("beta").get<double>();
    q.value = e.at("value").get<double>();
    q.std_error = e.value("std_error", 0.0);
    q.analytic = e.value("analytic", false);
    cache.put(e.at("model").get<std::string>(), q);
  }
  return cache;
}

/// An absent file yields an empty cache.
inline QuantileCache load_quantile_cache(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return quantile_cache_from_json(read_json_file(path));
}

inline void save_quantile_cache(const std::filesystem::path& path, const QuantileCache& cache) {
  auto f = open_output(path);
  f << quantile_cache_to_json(cache).dump(2) << '\n';
}

}  // namespace spectail
