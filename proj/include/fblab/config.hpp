#pragma once

// Experiment configuration: one JSON document describing the domain, source,
// boundary data, solver options, requested analyses and pass/fail thresholds.
// The schema is documented in README.md.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fblab/errors.hpp"
#include "fblab/geometry.hpp"
#include "fblab/solver.hpp"
#include "fblab/source.hpp"

namespace fblab {

using json = nlohmann::json;

enum class Analysis { Growth, Nondegeneracy, Weiss, Blowup, Uniqueness, Oracle };

inline const char* analysis_name(Analysis a) {
  switch (a) {
  case Analysis::Growth: return "growth";
  case Analysis::Nondegeneracy: return "nondegeneracy";
  case Analysis::Weiss: return "weiss";
  case Analysis::Blowup: return "blowup";
  case Analysis::Uniqueness: return "uniqueness";
  case Analysis::Oracle: return "oracle";
  }
  return "?";
}

struct BoundarySpec {
  double value = 0.0;
  /// g(x) = value + gradient . x
  Point gradient{};

  BoundaryData data() const {
    const auto v = value;
    const auto grad = gradient;
    if (grad[0] == 0.0 && grad[1] == 0.0) return BoundaryData::constant(v);
    return BoundaryData::from_function([v, grad](const Point& x) { return v + grad[0] * x[0] + grad[1] * x[1]; });
  }
};

struct LadderSpec {
  /// Growth and nondegeneracy radii: base_cells * h * ratio^k, k < rungs.
  int growth_base_cells = 4;
  int growth_rungs = 5;
  double growth_ratio = 2.0;
  /// Weiss radii: step_cells * h * k, k = 1..rungs.
  int weiss_step_cells = 16;
  int weiss_rungs = 7;
  /// Blow-up schedule: r0 * ratio^n, n < rungs.
  double blowup_r0 = 0.4;
  double blowup_ratio = 0.5;
  int blowup_rungs = 5;
  int unit_resolution = 33;
};

struct Thresholds {
  double growth_slack = 0.15;
  std::optional<double> growth_max_slope;
  double nondegeneracy_slack = 0.1;
  double barrier_min_fraction = 1.0 - 1e-6;
  double tol_mono_factor = 10.0;
  double homogeneity_max = 1e-2;
  double oracle_tol = 1e-9;
};

struct ExperimentConfig {
  std::string name;
  std::string description;
  std::vector<std::string> exercises;
  json expected = json::object();

  DomainSpec domain = interval(0.0, 1.0);
  std::vector<int> resolutions;
  SourceTerm source = SourceTerm::constant(0.0, 1);
  BoundarySpec boundary;
  SolveOptions solver;
  int uniqueness_trials = 5;
  std::vector<Analysis> analyses;
  std::optional<Point> anchor;
  LadderSpec ladders;
  Thresholds thresholds;
  std::string output_dir = "fblab-out";
  std::uint64_t seed = 0;

  int dim() const { return domain_dimension(domain); }
  bool wants(Analysis a) const {
    for (auto x : analyses)
      if (x == a) return true;
    return false;
  }
};

namespace detail {

[[noreturn]] inline void field_error(const std::string& field, const std::string& reason) {
  throw ConfigurationError(field + ": " + reason);
}

inline double number(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity") return kInfinity;
  }
  field_error(field, "expected a number");
}

inline Point point(const json& j, int dim, const std::string& field) {
  Point p{};
  if (dim == 1 && j.is_number()) {
    p[0] = j.get<double>();
    return p;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    field_error(field, "expected " + std::to_string(dim) + " coordinate(s)");
  for (int k = 0; k < dim; ++k) p[k] = number(j[static_cast<std::size_t>(k)], field);
  return p;
}

inline const json& require(const json& j, const char* key, const std::string& field) {
  if (!j.is_object() || !j.contains(key)) field_error(field.empty() ? key : field + "." + key, "is required");
  return j.at(key);
}

inline DomainSpec parse_domain(const json& j) {
  const auto type = require(j, "type", "domain").get<std::string>();
  if (type == "interval") {
    return interval(number(require(j, "min", "domain"), "domain.min"), number(require(j, "max", "domain"), "domain.max"));
  }
  if (type == "rectangle") {
    return rectangle(point(require(j, "min", "domain"), 2, "domain.min"), point(require(j, "max", "domain"), 2, "domain.max"));
  }
  if (type == "disc") {
    return disc(point(require(j, "center", "domain"), 2, "domain.center"),
                number(require(j, "radius", "domain"), "domain.radius"));
  }
  field_error("domain.type", "unknown domain type '" + type + "'");
}

inline SourceTerm parse_source(const json& j, int dim) {
  const auto kind = require(j, "kind", "source").get<std::string>();
  const double q = j.contains("q") ? number(j.at("q"), "source.q") : kInfinity;
  if (kind != "mollified_point_mass") {
    try {
      (void)predicted_growth_exponent(q, dim);
    } catch (const RegimeError& e) {
      throw RegimeError(std::string("source.q: ") + e.what());
    }
  }
  std::optional<SourceTerm> s;
  if (kind == "constant") {
    s = SourceTerm::constant(number(require(j, "value", "source"), "source.value"), dim, q);
  } else if (kind == "piecewise") {
    std::vector<SourceRegion> regions;
    if (j.contains("regions"))
      for (const auto& r : j.at("regions"))
        regions.push_back({point(require(r, "min", "source.regions"), dim, "source.regions.min"),
                           point(require(r, "max", "source.regions"), dim, "source.regions.max"),
                           number(require(r, "value", "source.regions"), "source.regions.value")});
    s = SourceTerm::piecewise(number(require(j, "default", "source"), "source.default"), std::move(regions), dim, q);
  } else if (kind == "radial_singular") {
    std::optional<double> cap;
    if (j.contains("cap") && !j.at("cap").is_null()) cap = number(j.at("cap"), "source.cap");
    s = SourceTerm::radial_singular(number(require(j, "amplitude", "source"), "source.amplitude"),
                                    point(require(j, "center", "source"), dim, "source.center"),
                                    number(require(j, "gamma", "source"), "source.gamma"), dim, q, cap);
  } else if (kind == "mollified_point_mass") {
    s = SourceTerm::mollified_point_mass(point(require(j, "center", "source"), dim, "source.center"),
                                         number(require(j, "width", "source"), "source.width"), dim,
                                         j.contains("mass") ? number(j.at("mass"), "source.mass") : 1.0);
  } else {
    field_error("source.kind", "unknown source kind '" + kind + "'");
  }
  if (j.contains("c0") && !j.at("c0").is_null()) {
    std::optional<Box> region;
    if (j.contains("c0_region")) {
      const auto& r = j.at("c0_region");
      region = Box{dim, point(require(r, "min", "source.c0_region"), dim, "source.c0_region.min"),
                   point(require(r, "max", "source.c0_region"), dim, "source.c0_region.max")};
    }
    s = s->with_lower_bound(number(j.at("c0"), "source.c0"), region);
  }
  return *s;
}

inline SolveOptions parse_solver(const json& j, int& trials) {
  SolveOptions o;
  if (j.is_null()) return o;
  if (j.contains("method")) {
    const auto m = j.at("method").get<std::string>();
    if (m == "projected-gauss-seidel") o.method = SolveMethod::ProjectedGaussSeidel;
    else if (m == "projected-sor") o.method = SolveMethod::ProjectedSor;
    else field_error("solver.method", "unknown method '" + m + "'");
  }
  if (j.contains("omega")) {
    if (j.at("omega").is_string() && j.at("omega").get<std::string>() == "auto") o.auto_omega = true;
    else o.omega = number(j.at("omega"), "solver.omega");
  }
  if (j.contains("max_iters")) o.max_iters = j.at("max_iters").get<int>();
  if (j.contains("tol_residual")) o.tol_residual = number(j.at("tol_residual"), "solver.tol_residual");
  if (j.contains("tol_uniqueness")) o.tol_uniqueness = number(j.at("tol_uniqueness"), "solver.tol_uniqueness");
  if (j.contains("uniqueness_trials")) trials = j.at("uniqueness_trials").get<int>();
  try {
    o.validate();
  } catch (const ConfigurationError& e) {
    field_error("solver", e.what());
  }
  return o;
}

} // namespace detail

/// Parses and statically validates a configuration document.
inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigurationError("config: top level must be an object");
  ExperimentConfig c;
  try {
    c.name = j.value("name", std::string("experiment"));
    c.description = j.value("description", std::string());
    if (j.contains("exercises")) c.exercises = j.at("exercises").get<std::vector<std::string>>();
    if (j.contains("expected")) c.expected = j.at("expected");

    c.domain = parse_domain(require(j, "domain", ""));
    const int dim = c.dim();

    const auto& res = require(j, "resolutions", "");
    if (res.is_number_integer()) c.resolutions.push_back(res.get<int>());
    else c.resolutions = res.get<std::vector<int>>();
    if (c.resolutions.empty()) field_error("resolutions", "at least one resolution is required");
    for (int r : c.resolutions)
      if (r < 3) field_error("resolutions", "every resolution must be at least 3");

    c.source = parse_source(require(j, "source", ""), dim);

    if (j.contains("boundary")) {
      const auto& b = j.at("boundary");
      const auto kind = b.value("kind", std::string("constant"));
      c.boundary.value = b.contains("value") ? number(b.at("value"), "boundary.value") : 0.0;
      if (kind == "affine") c.boundary.gradient = point(require(b, "gradient", "boundary"), dim, "boundary.gradient");
      else if (kind != "constant") field_error("boundary.kind", "unknown boundary kind '" + kind + "'");
    }

    c.solver = parse_solver(j.value("solver", json()), c.uniqueness_trials);
    if (c.uniqueness_trials < 2) field_error("solver.uniqueness_trials", "must be at least 2");

    if (j.contains("analyses")) {
      for (const auto& a : j.at("analyses")) {
        const auto s = a.get<std::string>();
        if (s == "growth") c.analyses.push_back(Analysis::Growth);
        else if (s == "nondegeneracy") c.analyses.push_back(Analysis::Nondegeneracy);
        else if (s == "weiss") c.analyses.push_back(Analysis::Weiss);
        else if (s == "blowup") c.analyses.push_back(Analysis::Blowup);
        else if (s == "uniqueness") c.analyses.push_back(Analysis::Uniqueness);
        else if (s == "oracle") c.analyses.push_back(Analysis::Oracle);
        else field_error("analyses", "unknown analysis '" + s + "'");
      }
    }
    if (j.contains("anchor")) c.anchor = point(j.at("anchor"), dim, "anchor");

    if (j.contains("ladders")) {
      const auto& l = j.at("ladders");
      auto& d = c.ladders;
      if (l.contains("growth")) {
        const auto& g = l.at("growth");
        d.growth_base_cells = g.value("base_cells", d.growth_base_cells);
        d.growth_rungs = g.value("rungs", d.growth_rungs);
        d.growth_ratio = g.value("ratio", d.growth_ratio);
      }
      if (l.contains("weiss")) {
        const auto& w = l.at("weiss");
        d.weiss_step_cells = w.value("step_cells", d.weiss_step_cells);
        d.weiss_rungs = w.value("rungs", d.weiss_rungs);
      }
      if (l.contains("blowup")) {
        const auto& b = l.at("blowup");
        d.blowup_r0 = b.value("r0", d.blowup_r0);
        d.blowup_ratio = b.value("ratio", d.blowup_ratio);
        d.blowup_rungs = b.value("rungs", d.blowup_rungs);
      }
      d.unit_resolution = l.value("unit_resolution", d.unit_resolution);
      if (d.growth_rungs < 4) field_error("ladders.growth.rungs", "need at least 4 rungs");
      if (!(d.growth_ratio > 1.0)) field_error("ladders.growth.ratio", "must exceed 1");
      if (d.growth_base_cells < 1) field_error("ladders.growth.base_cells", "must be positive");
      if (d.weiss_rungs < 5) field_error("ladders.weiss.rungs", "need at least 5 rungs");
      if (d.weiss_step_cells < 1) field_error("ladders.weiss.step_cells", "must be positive");
      if (d.blowup_rungs < 3) field_error("ladders.blowup.rungs", "need at least 3 rungs");
      if (!(d.blowup_ratio > 0.0 && d.blowup_ratio < 1.0)) field_error("ladders.blowup.ratio", "must lie in (0, 1)");
      if (d.unit_resolution < 5) field_error("ladders.unit_resolution", "must be at least 5");
    }

    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      auto& d = c.thresholds;
      d.growth_slack = t.value("growth_slack", d.growth_slack);
      if (t.contains("growth_max_slope")) d.growth_max_slope = t.at("growth_max_slope").get<double>();
      d.nondegeneracy_slack = t.value("nondegeneracy_slack", d.nondegeneracy_slack);
      d.barrier_min_fraction = t.value("barrier_min_fraction", d.barrier_min_fraction);
      d.tol_mono_factor = t.value("tol_mono_factor", d.tol_mono_factor);
      d.homogeneity_max = t.value("homogeneity_max", d.homogeneity_max);
      d.oracle_tol = t.value("oracle_tol", d.oracle_tol);
    }

    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }

  // Static preconditions of the requested analyses.
  if (c.wants(Analysis::Nondegeneracy) && !c.source.lower_bound())
    field_error("source.c0", "nondegeneracy requires a declared lower bound c0");
  const bool needs_anchor = c.wants(Analysis::Growth) || c.wants(Analysis::Nondegeneracy) ||
                            c.wants(Analysis::Weiss) || c.wants(Analysis::Blowup);
  if (needs_anchor && c.source.experimental())
    field_error("source.kind", "the mollified point mass is experimental and has no growth prediction");
  if (c.wants(Analysis::Oracle))
    for (int r : c.resolutions)
      if (build_grid(c.domain, r)->interior_count() > 14)
        field_error("analyses", "oracle needs at most 14 interior nodes; resolution " + std::to_string(r) + " has more");
  if (c.boundary.gradient[0] == 0.0 && c.boundary.gradient[1] == 0.0 && c.boundary.value < 0.0)
    field_error("boundary.value", "boundary data must be nonnegative");
  return c;
}

inline ExperimentConfig load_config(const std::string& path, std::string* raw_text = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  if (raw_text) *raw_text = ss.str();
  json j;
  try {
    j = json::parse(ss.str(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  return parse_config(j);
}

} // namespace fblab
