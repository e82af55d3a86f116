#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spectail/config_io.hpp"
#include "spectail/report.hpp"
#include "spectail/study.hpp"

using namespace spectail;
namespace fs = std::filesystem;

namespace {

StudyConfig small_config() {
  StudyConfig c;
  c.models = {tcopula_model(0.25)};
  c.n = 400;
  c.replications = 6;
  c.levels = {0.9};
  c.lags = {1};
  c.arguments = {0.5};
  c.kinds = {EstimatorKind::Forward, EstimatorKind::Backward};
  return c;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_record(const StudyRecord& a, const StudyRecord& b) {
  return a.model == b.model && a.replicate == b.replicate && a.kind == b.kind && a.lag == b.lag && a.x == b.x &&
         a.beta == b.beta && a.mode == b.mode && same_bits(a.threshold_value, b.threshold_value) &&
         a.exceedances == b.exceedances && same_bits(a.alpha_hat, b.alpha_hat) && same_bits(a.estimate, b.estimate);
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::path(testing::TempDir()) / ("spectail_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(f, line)) out.push_back(line);
  return out;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

StudyRecord hand_record(std::int64_t rep, ThresholdMode mode, double value) {
  StudyRecord r;
  r.model = "m";
  r.replicate = rep;
  r.kind = EstimatorKind::Forward;
  r.lag = 1;
  r.x = 0.5;
  r.beta = 0.9;
  r.mode = mode;
  r.estimate = value;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// running

TEST(Study, DefaultsMatchDesign) {
  const StudyConfig c;
  EXPECT_EQ(c.n, 2000);
  EXPECT_EQ(c.replications, 1000);
  EXPECT_EQ(c.levels, (std::vector<double>{0.9, 0.95}));
  EXPECT_EQ(c.lags, (std::vector<std::int64_t>{1, 3, 5}));
  EXPECT_EQ(c.arguments, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(c.models.size(), 8u);
  EXPECT_EQ(c.os_k(0.9), 200);
  EXPECT_EQ(c.os_k(0.95), 100);
}

TEST(Study, RecordCount) {
  StudyConfig c = small_config();
  c.replications = 2;
  const auto r = run_study(c);
  EXPECT_EQ(r.records.size(), 2u * 2u * 2u);
  EXPECT_TRUE(r.bootstrap.empty());
  ASSERT_EQ(r.quantiles.at(c.models[0].name).size(), 1u);
}

TEST(Study, HillRecordedOncePerLevelAndMode) {
  StudyConfig c = small_config();
  c.replications = 3;
  c.lags = {1, 2};
  c.arguments = {0.5, 1.0};
  c.kinds = {EstimatorKind::Hill, EstimatorKind::Forward};
  const auto r = run_study(c);
  std::size_t hill = 0;
  for (const auto& rec : r.records) {
    if (rec.kind == EstimatorKind::Hill) {
      ++hill;
      EXPECT_EQ(rec.lag, 0);
      EXPECT_EQ(rec.alpha_hat, rec.estimate);
    }
  }
  EXPECT_EQ(hill, 3u * 2u);
  EXPECT_EQ(r.records.size(), 3u * 2u * (1u + 4u));
}

TEST(Study, Deterministic) {
  StudyConfig c = small_config();
  c.models = {ngarch(), gumbel_model(1.5)};
  c.quantile_m = 50'000;
  c.quantile_reps = 3;
  const auto a = run_study(c);
  c.jobs = 3;
  const auto b = run_study(c);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_TRUE(same_record(a.records[i], b.records[i])) << i;
  EXPECT_EQ(a.quantiles.at("nGARCH")[0].value, b.quantiles.at("nGARCH")[0].value);
}

TEST(Study, SeedChangesResult) {
  StudyConfig c = small_config();
  const auto a = run_study(c);
  c.master_seed = 2;
  const auto b = run_study(c);
  EXPECT_NE(a.records[0].series_checksum, b.records[0].series_checksum);
}

TEST(Study, PairedDesign) {
  StudyConfig c = small_config();
  c.replications = 10;
  const auto r = run_study(c);
  std::map<std::int64_t, std::set<std::uint64_t>> sums;
  for (const auto& rec : r.records) sums[rec.replicate].insert(rec.series_checksum);
  std::set<std::uint64_t> distinct;
  for (const auto& [rep, s] : sums) {
    EXPECT_EQ(s.size(), 1u) << rep;
    distinct.insert(*s.begin());
  }
  EXPECT_EQ(distinct.size(), 10u);
  // the replicate's series is reproducible from its derived stream
  Stream st = replicate_stream(c.master_seed, c.models[0].name, 4);
  const TimeSeries s = generate(c.models[0], {c.n, c.max_lag(), c.burn_in}, st);
  EXPECT_EQ(s.checksum(), *sums[4].begin());
}

TEST(Study, ForwardOsEstimatesOnLattice) {
  StudyConfig c = small_config();
  c.models = {ngarch(), gumbel_model(2.0)};
  c.replications = 20;
  c.modes = {ThresholdMode::OS};
  c.arguments = {-0.3, 0.5, 1.0};
  const auto r = run_study(c);
  for (const auto& rec : r.records) {
    if (rec.kind != EstimatorKind::Forward) continue;
    EXPECT_EQ(rec.exceedances, 40);
    const double scaled = rec.estimate * static_cast<double>(rec.exceedances);
    EXPECT_NEAR(scaled, std::round(scaled), 1e-9);
  }
}

TEST(Study, MissingReplicatesDoNotAbort) {
  StudyConfig c = small_config();
  QuantileCache cache;
  cache.put(c.models[0].name, {0.9, 1e12, 0.0, false});
  const auto r = run_study(c, cache);
  std::size_t missing = 0;
  for (const auto& rec : r.records) {
    if (rec.mode == ThresholdMode::TQ) {
      EXPECT_TRUE(rec.missing());
      EXPECT_EQ(rec.exceedances, 0);
      ++missing;
    } else {
      EXPECT_FALSE(rec.missing());
    }
  }
  EXPECT_EQ(missing, 12u);
  const auto s = summarize(r, {c.models[0].name, EstimatorKind::Forward, 1, 0.5, 0.9});
  EXPECT_EQ(s.missing_tq, 6);
  EXPECT_EQ(s.missing_os, 0);
  EXPECT_TRUE(s.tq.empty());
  EXPECT_FALSE(s.variance_ratio);
}

TEST(Study, CacheIsUsedAndFilled) {
  StudyConfig c = small_config();
  QuantileCache cache;
  cache.put(c.models[0].name, {0.9, 2.0, 0.0, false});
  const auto r = run_study(c, cache);
  for (const auto& rec : r.records) {
    if (rec.mode == ThresholdMode::TQ) {
      EXPECT_EQ(rec.threshold_value, 2.0);
    }
  }
  c.levels = {0.9, 0.95};
  run_study(c, cache);
  ASSERT_TRUE(cache.find(c.models[0].name, 0.95));
  EXPECT_NEAR(cache.find(c.models[0].name, 0.95)->value, 2.7764, 5e-5);
}

TEST(Study, Bootstrap) {
  StudyConfig c = small_config();
  c.replications = 3;
  BootstrapSettings b;
  b.multiplier.replicates = 100;
  c.bootstrap = b;
  const auto r = run_study(c);
  EXPECT_EQ(r.bootstrap.size(), r.records.size());
  for (const auto& br : r.bootstrap) {
    EXPECT_LE(br.lower, br.upper);
    EXPECT_GE(br.degenerate, 0);
  }
}

TEST(Study, ValidateRejects) {
  StudyConfig c = small_config();
  c.replications = 1;
  EXPECT_THROW(run_study(c), DomainError);
  c = small_config();
  c.lags = {0};
  EXPECT_THROW(c.validate(), DomainError);
  c = small_config();
  c.levels = {0.9999};
  EXPECT_THROW(c.validate(), DomainError);
  c = small_config();
  c.kinds.clear();
  EXPECT_THROW(c.validate(), DomainError);
  c = small_config();
  c.models.clear();
  EXPECT_THROW(c.validate(), DomainError);
}

// ---------------------------------------------------------------------------
// summaries

TEST(Summary, AllEqualGivesUndefinedRatio) {
  StudyResult r;
  for (int i = 0; i < 5; ++i) {
    r.records.push_back(hand_record(i, ThresholdMode::TQ, 0.25));
    r.records.push_back(hand_record(i, ThresholdMode::OS, 0.25));
  }
  const auto s = summarize(r, {"m", EstimatorKind::Forward, 1, 0.5, 0.9});
  EXPECT_FALSE(s.variance_ratio);
  EXPECT_EQ(s.ks, 0.0);
  ASSERT_EQ(s.ecdf_tq.size(), 1u);
  EXPECT_EQ(s.ecdf_tq[0].cum_fraction, 1.0);
}

TEST(Summary, ConstantShiftGivesZeroRatio) {
  StudyResult r;
  const double os[] = {0.125, 0.5, 0.25, 0.375, 0.0625};
  for (int i = 0; i < 5; ++i) {
    r.records.push_back(hand_record(i, ThresholdMode::TQ, os[i] + 0.25));
    r.records.push_back(hand_record(i, ThresholdMode::OS, os[i]));
  }
  const auto s = summarize(r, {"m", EstimatorKind::Forward, 1, 0.5, 0.9});
  ASSERT_TRUE(s.variance_ratio);
  EXPECT_EQ(*s.variance_ratio, 0.0);
  EXPECT_DOUBLE_EQ(s.mean_tq - s.mean_os, 0.25);
  EXPECT_EQ(s.tq_sorted.front(), 0.3125);
}

TEST(Summary, OutsideUnitAndMissingCounts) {
  StudyResult r;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.records.push_back(hand_record(0, ThresholdMode::TQ, 1.2));
  r.records.push_back(hand_record(0, ThresholdMode::OS, 0.4));
  r.records.push_back(hand_record(1, ThresholdMode::TQ, nan));
  r.records.push_back(hand_record(1, ThresholdMode::OS, -0.1));
  r.records.push_back(hand_record(2, ThresholdMode::TQ, 0.3));
  r.records.push_back(hand_record(2, ThresholdMode::OS, 0.2));
  const auto s = summarize(r, {"m", EstimatorKind::Forward, 1, 0.5, 0.9});
  EXPECT_EQ(s.outside_unit_tq, 1);
  EXPECT_EQ(s.outside_unit_os, 1);
  EXPECT_EQ(s.missing_tq, 1);
  EXPECT_EQ(s.missing_os, 0);
  EXPECT_EQ(s.tq.size(), 2u);
}

TEST(Summary, EmptyQueryThrows) {
  StudyResult r;
  r.records.push_back(hand_record(0, ThresholdMode::TQ, 0.1));
  EXPECT_THROW(summarize(r, {"other", EstimatorKind::Forward, 1, 0.5, 0.9}), DomainError);
  EXPECT_THROW(summarize(r, {"m", EstimatorKind::Forward, 3, 0.5, 0.9}), DomainError);
}

TEST(Summary, EcdfPoints) {
  const auto e = ecdf_points({0.3, 0.1, 0.3, 0.2});
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0].value, 0.1);
  EXPECT_EQ(e[0].cum_fraction, 0.25);
  EXPECT_EQ(e[2].value, 0.3);
  EXPECT_EQ(e[2].cum_fraction, 1.0);
}

TEST(Summary, QueriesListed) {
  StudyConfig c = small_config();
  c.replications = 2;
  c.arguments = {0.5, 1.0};
  const auto r = run_study(c);
  const auto q = study_queries(r);
  EXPECT_EQ(q.size(), 4u);
}

// ---------------------------------------------------------------------------
// reports

TEST(Report, Files) {
  StudyConfig c = small_config();
  c.replications = 12;
  c.levels = {0.9, 0.95};
  c.kinds = {EstimatorKind::Forward, EstimatorKind::Backward, EstimatorKind::Hill};
  const auto result = run_study(c);
  const fs::path dir = scratch_dir("report");
  const auto summaries = emit_report(result, dir);
  ASSERT_TRUE(fs::exists(dir / "estimates.csv"));
  ASSERT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_FALSE(fs::exists(dir / "bootstrap.csv"));
  EXPECT_EQ(read_lines(dir / "summary.csv").size(), summaries.size() + 1);

  for (const auto& s : summaries) {
    const std::string stem = query_stem(s.query);
    const auto qq = read_lines(dir / "qq" / (stem + ".csv"));
    ASSERT_FALSE(qq.empty());
    EXPECT_EQ(qq[0], "rank,tq_sorted,os_sorted");
    EXPECT_EQ(qq.size() - 1, s.tq.size()) << stem;
    for (const char* mode : {"_TQ.csv", "_OS.csv"}) {
      const auto ec = read_lines(dir / "ecdf" / (stem + mode));
      EXPECT_EQ(ec[0], "value,cum_fraction");
      double prev = 0.0, prev_value = -1e300;
      for (std::size_t i = 1; i < ec.size(); ++i) {
        const auto cells = split_csv_line(ec[i]);
        const double v = parse_number(cells[0]), cum = parse_number(cells[1]);
        EXPECT_GE(cum, prev);
        EXPECT_GT(v, prev_value);
        prev = cum;
        prev_value = v;
      }
      EXPECT_EQ(prev, 1.0);
    }
  }

  // one figure triple per (model, lag, x); each Q-Q panel has one diagonal
  const std::string stem = c.models[0].name + "_t1_x0.5";
  for (const char* kind : {"qq_", "paired_", "ecdf_"}) ASSERT_TRUE(fs::exists(dir / "svg" / (kind + stem + ".svg")));
  std::ifstream f(dir / "svg" / ("qq_" + stem + ".svg"));
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string svg = ss.str();
  EXPECT_EQ(count_of(svg, "<g class=\"panel\">"), 4u);
  EXPECT_EQ(count_of(svg, "class=\"diagonal\""), 4u);
  std::ifstream g(dir / "svg" / ("ecdf_" + stem + ".svg"));
  std::stringstream se;
  se << g.rdbuf();
  EXPECT_EQ(count_of(se.str(), "class=\"diagonal\""), 0u);
  EXPECT_EQ(count_of(se.str(), "class=\"ecdf\""), 8u);
  fs::remove_all(dir);
}

TEST(Report, EstimatesRoundTrip) {
  StudyConfig c = small_config();
  c.kinds = {EstimatorKind::Hill, EstimatorKind::Backward};
  QuantileCache cache;
  cache.put(c.models[0].name, {0.9, 3.0, 0.0, false});
  auto result = run_study(c, cache);
  result.records[0].estimate = std::numeric_limits<double>::quiet_NaN();
  const fs::path dir = scratch_dir("roundtrip");
  write_estimates_csv(dir / "e.csv", result.records);
  const auto back = read_estimates_csv(dir / "e.csv");
  ASSERT_EQ(back.size(), result.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    auto expect = result.records[i];
    EXPECT_TRUE(same_record(back[i], expect)) << i;
  }
  EXPECT_EQ(read_lines(dir / "e.csv")[0], kEstimateHeader);
  fs::remove_all(dir);
}

TEST(Report, BootstrapFileWritten) {
  StudyConfig c = small_config();
  c.replications = 2;
  c.bootstrap = BootstrapSettings{};
  c.bootstrap->multiplier.replicates = 50;
  const fs::path dir = scratch_dir("boot");
  emit_report(run_study(c), dir, {true, false});
  EXPECT_EQ(read_lines(dir / "bootstrap.csv").size(), 1u + 2u * 2u * 2u);
  EXPECT_FALSE(fs::exists(dir / "svg"));
  fs::remove_all(dir);
}

TEST(Report, UnwritablePath) {
  const fs::path dir = scratch_dir("blocked");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "file") << "x";
  }
  StudyConfig c = small_config();
  c.replications = 2;
  const auto r = run_study(c);
  EXPECT_THROW(emit_report(r, dir / "file" / "sub"), IoError);
  EXPECT_THROW(write_estimates_csv(dir / "file" / "e.csv", r.records), IoError);
  EXPECT_THROW(read_estimates_csv(dir / "absent.csv"), IoError);
  fs::remove_all(dir);
}

TEST(Report, SeriesRoundTrip) {
  Stream s(5);
  const TimeSeries ts = generate(tgarch(), {50, 3, 100}, s);
  const fs::path dir = scratch_dir("series");
  write_series_csv(dir / "s.csv", ts);
  const TimeSeries back = read_series_csv(dir / "s.csv");
  EXPECT_EQ(back.n(), 50);
  EXPECT_EQ(back.first_index(), -2);
  EXPECT_EQ(back.checksum(), ts.checksum());
  fs::remove_all(dir);
}

TEST(Report, NumberFormatting) {
  EXPECT_EQ(fmt17(0.1), "0.10000000000000001");
  EXPECT_EQ(fmt17(std::numeric_limits<double>::quiet_NaN()), "NA");
  EXPECT_TRUE(std::isnan(parse_number("NA")));
  const double v = 1.0 / 3.0;
  EXPECT_EQ(parse_number(fmt17(v)), v);
}

// ---------------------------------------------------------------------------
// configuration files

TEST(Config, JsonRoundTrip) {
  StudyConfig c = small_config();
  c.models = {ngarch(), gumbel_model(1.2), tcopula_model(0.75)};
  c.kinds = {EstimatorKind::Hill};
  c.modes = {ThresholdMode::OS};
  c.bootstrap = BootstrapSettings{};
  c.bootstrap->multiplier.block_length = 7;
  c.bootstrap->multiplier.law = MultiplierSpec::Law::Rademacher;
  c.master_seed = 12345678901234ULL;
  const auto j = config_to_json(c);
  const auto c2 = config_from_json(j);
  EXPECT_EQ(config_to_json(c2), j);
  ASSERT_EQ(c2.models.size(), 3u);
  EXPECT_EQ(c2.models[1].name, "gumCopula_theta1.2");
  EXPECT_EQ(std::get<GumbelCopula>(std::get<MarkovCopulaSpec>(c2.models[1].params).copula).theta, 1.2);
  EXPECT_EQ(*c2.bootstrap->multiplier.block_length, 7);
  EXPECT_EQ(c2.master_seed, 12345678901234ULL);
}

TEST(Config, MissingKeysKeepDefaults) {
  const auto c = config_from_json(json::parse(R"({"n": 500, "replications": 10})"));
  EXPECT_EQ(c.n, 500);
  EXPECT_EQ(c.levels, StudyConfig{}.levels);
  EXPECT_EQ(c.models.size(), 8u);
  EXPECT_FALSE(c.bootstrap);
}

TEST(Config, Rejects) {
  EXPECT_THROW(config_from_json(json::parse(R"({"replicatons": 10})")), DomainError);
  EXPECT_THROW(config_from_json(json::parse(R"({"kinds": ["sideways"]})")), DomainError);
  EXPECT_THROW(config_from_json(json::parse(R"({"modes": ["XX"]})")), DomainError);
  EXPECT_THROW(config_from_json(json::parse(R"({"models": ["nope"]})")), DomainError);
  EXPECT_THROW(config_from_json(json::parse("[1, 2]")), DomainError);
}

TEST(Config, ModelObjects) {
  const auto g = model_from_json(json::parse(
      R"({"type": "garch", "alpha0": 0.2, "alpha1": 0.1, "beta1": 0.8, "innovation": {"t": 5}, "name": "g"})"));
  EXPECT_EQ(g.name, "g");
  EXPECT_TRUE(g.is_garch());
  EXPECT_EQ(model_from_name("pareto_alpha2.5").name, "pareto_alpha2.5");
  EXPECT_EQ(std::get<IidParetoSpec>(model_from_name("pareto_alpha2.5").params).alpha, 2.5);
}

TEST(Config, QuantileCacheFile) {
  QuantileCache cache;
  cache.put("nGARCH", {0.9, 3.39, 0.002, false});
  cache.put("tCopula_rho0.25", {0.95, 2.7764, 0.0, true});
  const fs::path dir = scratch_dir("cache");
  save_quantile_cache(dir / "q.json", cache);
  const auto back = load_quantile_cache(dir / "q.json");
  ASSERT_EQ(back.entries().size(), 2u);
  EXPECT_EQ(back.find("nGARCH", 0.9)->std_error, 0.002);
  EXPECT_TRUE(back.find("tCopula_rho0.25", 0.95)->analytic);
  EXPECT_TRUE(load_quantile_cache(dir / "none.json").entries().empty());
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// seeds

TEST(Seeds, SameLabelsSameStream) {
  Stream a = derive_seed(7, {std::string("model"), std::uint64_t{3}});
  Stream b = derive_seed(7, {std::string("model"), std::uint64_t{3}});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Seeds, EmptyLabelsMixMasterOnly) {
  Stream a = derive_seed(42);
  Stream b(mix_seed(42, {}));
  EXPECT_EQ(a.seed(), b.seed());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(derive_seed(42).seed(), 42u);
}

TEST(Seeds, Avalanche) {
  // 10^4 label pairs differing in one element: all first 64 outputs differ and
  // the seeds differ in about half their bits
  Stream pick(2024);
  double bits = 0.0;
  const int pairs = 10'000;
  for (int p = 0; p < pairs; ++p) {
    const std::uint64_t master = pick.next_u64();
    const std::uint64_t l1 = pick.next_u64() % 1000, l2 = pick.next_u64() % 1000;
    const std::string name = "m" + std::to_string(p % 17);
    const std::uint64_t l2b = l2 ^ (std::uint64_t{1} << (p % 10));
    Stream a = derive_seed(master, {name, l1, l2});
    Stream b = derive_seed(master, {name, l1, l2b});
    bits += std::popcount(a.seed() ^ b.seed());
    for (int i = 0; i < 64; ++i) ASSERT_NE(a.next_u64(), b.next_u64()) << p << ' ' << i;
  }
  EXPECT_NEAR(bits / pairs, 32.0, 0.5);
}

TEST(Seeds, LabelTypesAndOrderMatter) {
  EXPECT_NE(mix_seed(1, {std::uint64_t{5}}), mix_seed(1, {std::string("5")}));
  EXPECT_NE(mix_seed(1, {std::uint64_t{1}, std::uint64_t{2}}), mix_seed(1, {std::uint64_t{2}, std::uint64_t{1}}));
  EXPECT_NE(mix_seed(1, {std::uint64_t{0}}), mix_seed(1, {}));
}
