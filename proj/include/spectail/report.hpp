#pragma once

// Flat-file output of a study: estimate CSV (and its reader), per-query
// summary, Q-Q and ECDF tables, and SVG figures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spectail/error.hpp"
#include "spectail/study.hpp"

namespace spectail {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Round-trip decimal (17 significant digits); NaN is written as NA.
inline std::string fmt17(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_number(const std::string& s) {
  if (s == "NA" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw IoError("malformed number '" + s + "'");
  return v;
}

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

// ---------------------------------------------------------------------------
// Estimate CSV

inline constexpr const char* kEstimateHeader =
    "model,replicate,kind,lag,x,beta,mode,threshold_value,exceedances,alpha_hat,estimate";

inline void write_estimates_csv(const std::filesystem::path& path, const std::vector<StudyRecord>& records) {
  auto f = open_output(path);
  f << kEstimateHeader << '\n';
  for (const auto& r : records) {
    f << r.model << ',' << r.replicate << ',' << kind_name(r.kind) << ',' << r.lag << ',' << fmt17(r.x) << ','
      << fmt17(r.beta) << ',' << mode_name(r.mode) << ',' << fmt17(r.threshold_value) << ',' << r.exceedances << ','
      << fmt17(r.alpha_hat) << ',' << fmt17(r.estimate) << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::vector<StudyRecord> read_estimates_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(f, line);
  if (line != kEstimateHeader) throw IoError("unexpected header in " + path.string());
  std::vector<StudyRecord> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 11) throw IoError("malformed row in " + path.string());
    StudyRecord r;
    r.model = c[0];
    r.replicate = std::stoll(c[1]);
    r.kind = parse_kind(c[2]);
    r.lag = std::stoll(c[3]);
    r.x = parse_number(c[4]);
    r.beta = parse_number(c[5]);
    r.mode = parse_mode(c[6]);
    r.threshold_value = parse_number(c[7]);
    r.exceedances = std::stoll(c[8]);
    r.alpha_hat = parse_number(c[9]);
    r.estimate = parse_number(c[10]);
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_bootstrap_csv(const std::filesystem::path& path, const std::vector<BootstrapRecord>& records) {
  auto f = open_output(path);
  f << "model,replicate,kind,lag,x,beta,mode,lower,upper,degenerate\n";
  for (const auto& r : records) {
    f << r.model << ',' << r.replicate << ',' << kind_name(r.kind) << ',' << r.lag << ',' << fmt17(r.x) << ','
      << fmt17(r.beta) << ',' << mode_name(r.mode) << ',' << fmt17(r.lower) << ',' << fmt17(r.upper) << ','
      << r.degenerate << '\n';
  }
}

// ---------------------------------------------------------------------------
// Per-query tables

inline std::string query_stem(const SummaryQuery& q) {
  if (q.kind == EstimatorKind::Hill) return q.model + "_hill_b" + short_num(q.beta);
  return q.model + "_" + kind_name(q.kind) + "_t" + std::to_string(q.lag) + "_x" + short_num(q.x) + "_b" +
         short_num(q.beta);
}

inline void write_qq_csv(const std::filesystem::path& path, const QuerySummary& s) {
  auto f = open_output(path);
  f << "rank,tq_sorted,os_sorted\n";
  for (std::size_t i = 0; i < s.tq_sorted.size(); ++i)
    f << i + 1 << ',' << fmt17(s.tq_sorted[i]) << ',' << fmt17(s.os_sorted[i]) << '\n';
}

inline void write_ecdf_csv(const std::filesystem::path& path, const std::vector<EcdfPoint>& pts) {
  auto f = open_output(path);
  f << "value,cum_fraction\n";
  for (const auto& p : pts) f << fmt17(p.value) << ',' << fmt17(p.cum_fraction) << '\n';
}

inline void write_summary_csv(const std::filesystem::path& path, const std::vector<QuerySummary>& rows) {
  auto f = open_output(path);
  f << "model,kind,lag,x,beta,pairs,mean_tq,sd_tq,mean_os,sd_os,variance_ratio,ks,outside_unit_tq,outside_unit_os,"
       "missing_tq,missing_os\n";
  for (const auto& s : rows) {
    const auto& q = s.query;
    f << q.model << ',' << kind_name(q.kind) << ',' << q.lag << ',' << fmt17(q.x) << ',' << fmt17(q.beta) << ','
      << s.tq.size() << ',' << fmt17(s.mean_tq) << ',' << fmt17(s.sd_tq) << ',' << fmt17(s.mean_os) << ','
      << fmt17(s.sd_os) << ',' << (s.variance_ratio ? fmt17(*s.variance_ratio) : std::string("undefined")) << ','
      << fmt17(s.ks) << ',' << s.outside_unit_tq << ',' << s.outside_unit_os << ',' << s.missing_tq << ','
      << s.missing_os << '\n';
  }
}

// ---------------------------------------------------------------------------
// SVG

namespace svg {

struct Panel {
  std::string title;
  std::vector<double> xs, ys;         // scatter points
  std::vector<EcdfPoint> step_a;      // ECDF, dashed red
  std::vector<EcdfPoint> step_b;      // ECDF, solid blue
  bool diagonal = false;
};

inline constexpr double kPanelW = 320, kPanelH = 280, kMargin = 44;

struct Frame {
  double x0, y0, lo_x, hi_x, lo_y, hi_y;
  double px(double v) const { return x0 + kMargin + (v - lo_x) / (hi_x - lo_x) * (kPanelW - 1.5 * kMargin); }
  double py(double v) const { return y0 + kPanelH - kMargin - (v - lo_y) / (hi_y - lo_y) * (kPanelH - 1.7 * kMargin); }
};

inline void range_of(const std::vector<double>& v, double& lo, double& hi) {
  for (double x : v) {
    if (std::isnan(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
}

inline void draw_panel(std::ostream& o, const Panel& p, double x0, double y0) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  range_of(p.xs, lo, hi);
  range_of(p.ys, lo, hi);
  for (const auto& e : p.step_a) { lo = std::min(lo, e.value); hi = std::max(hi, e.value); }
  for (const auto& e : p.step_b) { lo = std::min(lo, e.value); hi = std::max(hi, e.value); }
  if (!std::isfinite(lo)) { lo = 0.0; hi = 1.0; }
  if (hi - lo < 1e-12) { lo -= 0.5; hi += 0.5; }
  const double pad = 0.04 * (hi - lo);
  const bool ecdf = !p.step_a.empty() || !p.step_b.empty();
  Frame f{x0, y0, lo - pad, hi + pad, ecdf ? 0.0 : lo - pad, ecdf ? 1.0 : hi + pad};
  o << "<g class=\"panel\">\n";
  o << "<rect x=\"" << f.px(f.lo_x) << "\" y=\"" << f.py(f.hi_y) << "\" width=\"" << f.px(f.hi_x) - f.px(f.lo_x)
    << "\" height=\"" << f.py(f.lo_y) - f.py(f.hi_y) << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << x0 + kPanelW / 2 << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << p.title << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double vx = f.lo_x + (f.hi_x - f.lo_x) * i / 4.0, vy = f.lo_y + (f.hi_y - f.lo_y) * i / 4.0;
    o << "<text x=\"" << f.px(vx) << "\" y=\"" << f.py(f.lo_y) + 14 << "\" text-anchor=\"middle\" font-size=\"9\">"
      << short_num(std::round(vx * 1000) / 1000) << "</text>\n";
    o << "<text x=\"" << f.px(f.lo_x) - 4 << "\" y=\"" << f.py(vy) + 3 << "\" text-anchor=\"end\" font-size=\"9\">"
      << short_num(std::round(vy * 1000) / 1000) << "</text>\n";
  }
  if (p.diagonal) {
    const double a = std::max(f.lo_x, f.lo_y), b = std::min(f.hi_x, f.hi_y);
    o << "<path class=\"diagonal\" d=\"M" << f.px(a) << ' ' << f.py(a) << " L" << f.px(b) << ' ' << f.py(b)
      << "\" stroke=\"red\" stroke-dasharray=\"6,4\" fill=\"none\"/>\n";
  }
  for (std::size_t i = 0; i < p.xs.size(); ++i) {
    o << "<circle cx=\"" << f.px(p.xs[i]) << "\" cy=\"" << f.py(p.ys[i]) << "\" r=\"1.6\" fill=\"black\"/>\n";
  }
  auto steps = [&](const std::vector<EcdfPoint>& pts, const char* style) {
    if (pts.empty()) return;
    o << "<path class=\"ecdf\" d=\"M" << f.px(f.lo_x) << ' ' << f.py(0.0);
    double level = 0.0;
    for (const auto& e : pts) {
      o << " L" << f.px(e.value) << ' ' << f.py(level) << " L" << f.px(e.value) << ' ' << f.py(e.cum_fraction);
      level = e.cum_fraction;
    }
    o << " L" << f.px(f.hi_x) << ' ' << f.py(level) << "\" fill=\"none\" " << style << "/>\n";
  };
  steps(p.step_a, "stroke=\"red\" stroke-dasharray=\"6,4\"");
  steps(p.step_b, "stroke=\"blue\"");
  o << "</g>\n";
}

/// Grid of panels, row-major with `cols` columns.
inline void write_figure(const std::filesystem::path& path, const std::string& title, const std::vector<Panel>& panels,
                         int cols) {
  const int rows = (static_cast<int>(panels.size()) + cols - 1) / cols;
  auto o = open_output(path);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * kPanelW << "\" height=\""
    << rows * kPanelH + 24 << "\" font-family=\"sans-serif\">\n";
  o << "<text x=\"8\" y=\"16\" font-size=\"13\">" << title << "</text>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const int r = static_cast<int>(i) / cols, c = static_cast<int>(i) % cols;
    draw_panel(o, panels[i], c * kPanelW, 24 + r * kPanelH);
  }
  o << "</svg>\n";
}

}  // namespace svg

// ---------------------------------------------------------------------------

struct ReportFormats {
  bool csv = true;
  bool svg = true;
};

/// Writes estimates.csv, summary.csv, qq/ and ecdf/ tables and, when asked,
/// one Q-Q, one paired scatter and one ECDF figure per (model, lag, x) with
/// estimator kinds as rows and levels as columns. Returns the summaries.
inline std::vector<QuerySummary> emit_report(const StudyResult& result, const std::filesystem::path& dir,
                                             const ReportFormats& formats = {}) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  std::vector<QuerySummary> summaries;
  for (const auto& q : study_queries(result)) summaries.push_back(summarize(result, q));
  if (formats.csv) {
    write_estimates_csv(dir / "estimates.csv", result.records);
    write_summary_csv(dir / "summary.csv", summaries);
    if (!result.bootstrap.empty()) write_bootstrap_csv(dir / "bootstrap.csv", result.bootstrap);
    for (const auto& s : summaries) {
      const std::string stem = query_stem(s.query);
      write_qq_csv(dir / "qq" / (stem + ".csv"), s);
      write_ecdf_csv(dir / "ecdf" / (stem + "_TQ.csv"), s.ecdf_tq);
      write_ecdf_csv(dir / "ecdf" / (stem + "_OS.csv"), s.ecdf_os);
    }
  }
  if (formats.svg) {
    // Group by (model, lag, x); rows are kinds, columns levels.
    std::map<std::tuple<std::string, std::int64_t, double>, std::vector<const QuerySummary*>> groups;
    for (const auto& s : summaries) {
      if (s.query.kind == EstimatorKind::Hill) continue;
      groups[{s.query.model, s.query.lag, s.query.x}].push_back(&s);
    }
    for (const auto& [key, members] : groups) {
      const auto& [model, lag, x] = key;
      std::vector<double> betas;
      for (const auto* m : members) betas.push_back(m->query.beta);
      std::sort(betas.begin(), betas.end());
      betas.erase(std::unique(betas.begin(), betas.end()), betas.end());
      std::vector<const QuerySummary*> ordered(members);
      std::sort(ordered.begin(), ordered.end(), [](const QuerySummary* a, const QuerySummary* b) {
        return std::make_pair(static_cast<int>(a->query.kind), a->query.beta) <
               std::make_pair(static_cast<int>(b->query.kind), b->query.beta);
      });
      std::vector<svg::Panel> qq, paired, ecdf;
      for (const auto* m : ordered) {
        const std::string t = kind_name(m->query.kind) + ", level " + short_num(m->query.beta);
        qq.push_back({t + " (x: OS, y: TQ)", m->os_sorted, m->tq_sorted, {}, {}, true});
        paired.push_back({t + " (x: OS, y: TQ)", m->os, m->tq, {}, {}, true});
        ecdf.push_back({t + " (TQ dashed, OS solid)", {}, {}, m->ecdf_tq, m->ecdf_os, false});
      }
      const std::string stem = model + "_t" + std::to_string(lag) + "_x" + short_num(x);
      const std::string what = "P{Theta_" + std::to_string(lag) + " > " + short_num(x) + "}, " + model;
      const int cols = static_cast<int>(betas.size());
      svg::write_figure(dir / "svg" / ("qq_" + stem + ".svg"), "Q-Q, estimators of " + what, qq, cols);
      svg::write_figure(dir / "svg" / ("paired_" + stem + ".svg"), "TQ vs OS estimates of " + what, paired, cols);
      svg::write_figure(dir / "svg" / ("ecdf_" + stem + ".svg"), "Empirical cdfs, estimators of " + what, ecdf, cols);
    }
  }
  return summaries;
}

// ---------------------------------------------------------------------------
// Series files: `index,value` over the padded window 1-L..n+L.

inline void write_series_csv(const std::filesystem::path& path, const TimeSeries& series) {
  auto f = open_output(path);
  f << "index,value\n";
  for (std::int64_t i = series.first_index(); i <= series.last_index(); ++i) f << i << ',' << fmt17(series[i]) << '\n';
}

/// The padding L is recovered from the first index, which must be 1 - L.
inline TimeSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(f, line);
  if (line != "index,value") throw IoError("unexpected header in " + path.string());
  std::vector<double> values;
  std::int64_t first = 1, expected = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 2) throw IoError("malformed row in " + path.string());
    const std::int64_t idx = std::stoll(c[0]);
    if (values.empty()) first = expected = idx;
    if (idx != expected) throw IoError("series indices must be consecutive in " + path.string());
    ++expected;
    const double v = parse_number(c[1]);
    if (!std::isfinite(v)) throw IoError("non-finite value in " + path.string());
    values.push_back(v);
  }
  const std::int64_t lag = 1 - first;
  if (lag < 0 || static_cast<std::int64_t>(values.size()) <= 2 * lag)
    throw IoError("series file has inconsistent padding: " + path.string());
  return TimeSeries(std::move(values), lag, path.stem().string());
}

}  // namespace spectail
