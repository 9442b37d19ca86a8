#pragma once

// Config-driven experiment runner: solve, run the requested analyses, write
// CSV artifacts and a JSON manifest with pass/fail per check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fblab/analysis.hpp"
#include "fblab/config.hpp"
#include "fblab/solver.hpp"

namespace fblab {

struct CheckResult {
  std::string name;
  int resolution = 0;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  /// Signed distance to the threshold, positive when passing.
  double margin = 0.0;
  std::string detail;
};

struct RunManifest {
  std::string config_path;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> files;
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

struct RunOptions {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  /// Name of the environment variable that may override the output directory.
  const char* output_env = "FBLAB_OUTPUT_DIR";
};

/// FNV-1a, 64 bit, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string fmt(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Row-oriented CSV writer; numbers are written with round-trip precision.
class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    row_strings(header);
  }
  void row(const std::vector<double>& values) {
    std::vector<std::string> s;
    for (double v : values) s.push_back(fmt(v));
    row_strings(s);
  }
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

private:
  std::ofstream out_;
};

inline json check_json(const CheckResult& c) {
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(fmt(v)); };
  return json{{"name", c.name},         {"resolution", c.resolution}, {"passed", c.passed},
              {"value", num(c.value)},  {"threshold", num(c.threshold)}, {"margin", num(c.margin)},
              {"detail", c.detail}};
}

} // namespace detail

inline json manifest_json(const RunManifest& m) {
  json checks = json::array();
  for (const auto& c : m.checks) checks.push_back(detail::check_json(c));
  return json{{"config", m.config_path}, {"config_hash", m.config_hash}, {"seed", m.seed},
              {"started_at", m.started_at}, {"finished_at", m.finished_at}, {"files", m.files},
              {"checks", checks}, {"passed", m.passed()}};
}

/// Writes solve.csv, u.csv and the CSV of every requested analysis under
/// `dir` for a single resolution, appending checks to `manifest`.
inline void run_resolution(const ExperimentConfig& cfg, int resolution, std::uint64_t seed,
                           const std::filesystem::path& dir, RunManifest& manifest, std::ostream* log) {
  namespace fs = std::filesystem;
  using detail::CsvWriter;
  fs::create_directories(dir);
  auto note = [&](const fs::path& p) { manifest.files.push_back(p.generic_string()); };
  auto add = [&](CheckResult c) {
    c.resolution = resolution;
    if (log) *log << (c.passed ? "  pass  " : "  FAIL  ") << c.name << "  " << c.detail << '\n';
    manifest.checks.push_back(std::move(c));
  };

  const auto grid = build_grid(cfg.domain, resolution);
  const double h = grid->spacing();
  const int dim = grid->dim();
  const double q = cfg.source.q();
  const auto g = cfg.boundary.data();
  auto opts = cfg.solver;
  opts.seed = seed;

  if (log) *log << "resolution " << resolution << " (h = " << h << ", " << grid->interior_count() << " interior nodes)\n";

  const auto rep = solve(grid, cfg.source, g, opts);
  {
    CsvWriter w(dir / "solve.csv", {"iteration", "energy", "kkt_residual"});
    for (std::size_t k = 0; k < rep.energy_trace.size(); ++k)
      w.row({static_cast<double>(k), rep.energy_trace[k],
             k == 0 ? std::numeric_limits<double>::quiet_NaN() : rep.kkt_trace[k - 1]});
    note(dir / "solve.csv");
  }
  {
    CsvWriter w(dir / "u.csv", dim == 1 ? std::vector<std::string>{"x", "u"} : std::vector<std::string>{"x", "y", "u"});
    for (std::size_t node = 0; node < grid->size(); ++node) {
      if (!grid->in_domain(node)) continue;
      const auto p = grid->coord(node);
      if (dim == 1) w.row({p[0], rep.u[node]});
      else w.row({p[0], p[1], rep.u[node]});
    }
    note(dir / "u.csv");
  }
  add({"solve.converged", 0, rep.converged, rep.final_kkt_residual, rep.tolerance,
       rep.tolerance - rep.final_kkt_residual,
       std::to_string(rep.iterations) + " sweeps, kkt residual " + detail::fmt(rep.final_kkt_residual)});
  if (!rep.converged) return;

  const auto& u = rep.u;
  const bool needs_anchor = cfg.wants(Analysis::Growth) || cfg.wants(Analysis::Nondegeneracy) ||
                            cfg.wants(Analysis::Weiss) || cfg.wants(Analysis::Blowup);
  std::optional<Point> anchor;
  if (needs_anchor) {
    const auto fb = extract_free_boundary(u);
    if (fb.empty()) {
      add({"free_boundary.found", 0, false, 0.0, 1.0, -1.0, "solution has no free boundary"});
    } else {
      anchor = free_boundary_anchor(u, fb, cfg.anchor);
      add({"free_boundary.found", 0, true, static_cast<double>(fb.nodes.size()), 1.0,
           static_cast<double>(fb.nodes.size()) - 1.0, "anchor " + detail::fmt((*anchor)[0]) +
           (dim == 2 ? "," + detail::fmt((*anchor)[1]) : std::string())});
    }
  }

  const auto& lad = cfg.ladders;
  const auto& thr = cfg.thresholds;
  std::vector<double> growth_radii;
  for (int k = 0; k < lad.growth_rungs; ++k)
    growth_radii.push_back(lad.growth_base_cells * h * std::pow(lad.growth_ratio, k));

  auto guarded = [&](const char* name, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      add({name, 0, false, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
           std::numeric_limits<double>::quiet_NaN(), e.what()});
    }
  };

  if (cfg.wants(Analysis::Growth) && anchor) guarded("growth", [&] {
    const auto gr = growth_upper_check(u, *anchor, growth_radii, q, thr.growth_slack);
    CsvWriter w(dir / "growth.csv", {"r", "sup_u", "log_r", "log_sup", "predicted_exponent", "fitted_slope"});
    for (std::size_t i = 0; i < gr.radii.size(); ++i)
      w.row({gr.radii[i], gr.sups[i], std::log(gr.radii[i]), std::log(gr.sups[i]), gr.predicted, gr.fitted_slope});
    note(dir / "growth.csv");
    const double lo = gr.predicted - thr.growth_slack;
    bool ok = gr.passed;
    double margin = gr.fitted_slope - lo;
    std::string detail = "slope " + detail::fmt(gr.fitted_slope) + " >= " + detail::fmt(lo);
    if (thr.growth_max_slope) {
      ok = ok && gr.fitted_slope <= *thr.growth_max_slope;
      margin = std::min(margin, *thr.growth_max_slope - gr.fitted_slope);
      detail += " and <= " + detail::fmt(*thr.growth_max_slope);
    }
    add({"growth", 0, ok, gr.fitted_slope, lo, margin, detail});
  });

  if (cfg.wants(Analysis::Nondegeneracy) && anchor) guarded("nondegeneracy", [&] {
    const double c0 = cfg.source.lower_bound()->c0;
    const auto nd = nondegeneracy_check(u, *anchor, growth_radii, c0, q, thr.nondegeneracy_slack);
    CsvWriter w(dir / "nondegeneracy.csv",
                {"r", "sup_u", "log_r", "log_sup", "predicted_exponent", "fitted_slope", "bound", "passed"});
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nd.radii.size(); ++i) {
      const bool ok = nd.sups[i] >= nd.bounds[i] * (1.0 - nd.slack);
      worst = std::min(worst, nd.sups[i] / nd.bounds[i]);
      w.row({nd.radii[i], nd.sups[i], std::log(nd.radii[i]), std::log(nd.sups[i]), nd.predicted, nd.fitted_slope,
             nd.bounds[i], ok ? 1.0 : 0.0});
    }
    note(dir / "nondegeneracy.csv");
    add({"nondegeneracy", 0, nd.passed, worst, 1.0 - nd.slack, worst - (1.0 - nd.slack),
         "min sup/bound " + detail::fmt(worst) + " over " + std::to_string(nd.radii.size()) + " rungs"});

    const auto bar = barrier_field(u, *anchor, c0, q);
    add({"barrier", 0, bar.superharmonic_fraction >= thr.barrier_min_fraction, bar.superharmonic_fraction,
         thr.barrier_min_fraction, bar.superharmonic_fraction - thr.barrier_min_fraction,
         std::to_string(bar.violating_nodes) + " of " + std::to_string(bar.positive_nodes) +
             " positive nodes with Delta_h v > tol"});
  });

  if (cfg.wants(Analysis::Weiss) && anchor) guarded("weiss", [&] {
    std::vector<double> radii;
    for (int k = 1; k <= lad.weiss_rungs; ++k) radii.push_back(lad.weiss_step_cells * h * k);
    const auto unit = unit_ball_grid(dim, lad.unit_resolution);
    const double tol_mono = thr.tol_mono_factor * h;
    const auto prof = weiss_profile(u, cfg.source, q, *anchor, radii, unit, tol_mono);
    CsvWriter w(dir / "weiss.csv", {"r", "W_rescaled", "W_raw", "dirichlet", "source", "boundary", "delta_W"});
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < prof.radii.size(); ++k) {
      const auto& c = prof.rescaled[k];
      const double dw = k == 0 ? std::numeric_limits<double>::quiet_NaN() : c.total - prof.rescaled[k - 1].total;
      if (k > 0) worst = std::min(worst, dw);
      w.row({prof.radii[k], c.total, prof.raw[k].total, c.dirichlet, c.source, c.boundary, dw});
    }
    note(dir / "weiss.csv");
    add({"weiss", 0, prof.monotone(), worst, -tol_mono, worst + tol_mono,
         "min delta_W " + detail::fmt(worst) + ", tol_mono " + detail::fmt(tol_mono)});
  });

  if (cfg.wants(Analysis::Blowup) && anchor) guarded("blowup", [&] {
    std::vector<double> schedule;
    for (int n = 0; n < lad.blowup_rungs; ++n) schedule.push_back(lad.blowup_r0 * std::pow(lad.blowup_ratio, n));
    const auto unit = unit_ball_grid(dim, lad.unit_resolution);
    const auto b = blowup_sequence(u, cfg.source, q, *anchor, schedule, unit);
    CsvWriter w(dir / "blowup.csv", {"r_n", "c0_dist_to_prev", "c1_dist_to_prev", "residual_deg2", "residual_deg_2mNq"});
    for (std::size_t n = 0; n < b.radii.size(); ++n)
      w.row({b.radii[n], b.c0_distances[n], b.c1_distances[n], b.residual_deg2[n], b.residual_deg_beta[n]});
    note(dir / "blowup.csv");
    add({"blowup", 0, b.homogeneity_residual <= thr.homogeneity_max, b.homogeneity_residual, thr.homogeneity_max,
         thr.homogeneity_max - b.homogeneity_residual,
         "degree-2 residual " + detail::fmt(b.homogeneity_residual) + ", -Lap u* vs f_r " +
             detail::fmt(b.laplacian_residual_source) + ", vs 1 " + detail::fmt(b.laplacian_residual_one)});
  });

  if (cfg.wants(Analysis::Uniqueness)) guarded("uniqueness", [&] {
    const double d = verify_uniqueness(grid, cfg.source, g, opts, cfg.uniqueness_trials);
    add({"uniqueness", 0, d <= opts.tol_uniqueness, d, opts.tol_uniqueness, opts.tol_uniqueness - d,
         "max pairwise distance " + detail::fmt(d) + " over " + std::to_string(cfg.uniqueness_trials) + " trials"});
  });

  if (cfg.wants(Analysis::Oracle)) guarded("oracle", [&] {
    const auto exact = exact_small_oracle(grid, cfg.source, g);
    double d = 0.0;
    for (std::size_t node = 0; node < grid->size(); ++node) d = std::max(d, std::abs(exact[node] - u[node]));
    add({"oracle", 0, d <= thr.oracle_tol, d, thr.oracle_tol, thr.oracle_tol - d,
         "sup distance to exhaustive solution " + detail::fmt(d)});
  });
}

/// Executes the experiment described by the config at `config_path`.
inline RunManifest run_experiment(const std::string& config_path, const RunOptions& ro = {}) {
  namespace fs = std::filesystem;
  std::string raw;
  const auto cfg = load_config(config_path, &raw);

  RunManifest m;
  m.config_path = config_path;
  m.config_hash = fnv1a_hex(raw);
  m.seed = ro.seed.value_or(cfg.seed);
  m.started_at = detail::utc_now();

  fs::path out = cfg.output_dir;
  if (const char* env = ro.output_env ? std::getenv(ro.output_env) : nullptr; env && *env) out = env;
  if (ro.output_dir) out = *ro.output_dir;

  std::ostream* log = ro.quiet ? nullptr : &std::cout;
  if (log) *log << cfg.name << ": " << cfg.description << '\n';
  for (int res : cfg.resolutions)
    run_resolution(cfg, res, m.seed, out / ("res_" + std::to_string(res)), m, log);

  m.finished_at = detail::utc_now();
  fs::create_directories(out);
  const auto manifest_path = out / "manifest.json";
  m.files.push_back(manifest_path.generic_string());
  std::ofstream mf(manifest_path, std::ios::binary);
  if (!mf) throw Error("cannot write '" + manifest_path.string() + "'");
  mf << manifest_json(m).dump(2) << '\n';
  if (log) *log << (m.passed() ? "all checks passed" : "some checks FAILED") << " (" << manifest_path.string() << ")\n";
  return m;
}

struct FixtureRow {
  std::string file;
  std::string name;
  std::string exercises;
  std::string expected;
};

/// One row per *.json file in `dir`, sorted by file name.
inline std::vector<FixtureRow> list_fixtures(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigurationError("fixtures directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<FixtureRow> rows;
  for (const auto& p : files) {
    std::ifstream in(p);
    json j;
    try {
      j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw ConfigurationError(p.string() + ": " + e.what());
    }
    FixtureRow row{p.filename().string(), j.value("name", p.stem().string()), "", ""};
    if (j.contains("exercises"))
      for (const auto& s : j.at("exercises")) row.exercises += (row.exercises.empty() ? "" : "; ") + s.get<std::string>();
    if (j.contains("expected"))
      for (const auto& [k, v] : j.at("expected").items())
        row.expected += (row.expected.empty() ? "" : ", ") + k + "=" + v.get<std::string>();
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace fblab
