#pragma once

// Measurements on computed solutions: free boundary extraction, growth and
// nondegeneracy ladders, the nondegeneracy barrier, blow-up rescaling, Weiss
// energy ladders and homogeneity residuals.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fblab/energy.hpp"
#include "fblab/errors.hpp"
#include "fblab/geometry.hpp"
#include "fblab/source.hpp"

namespace fblab {

// ---------------------------------------------------------------------------
// Free boundary

struct FreeBoundary {
  /// Positive-side nodes of the discrete interface, ascending.
  std::vector<std::size_t> nodes;
  double positivity_threshold = 0.0;

  bool empty() const { return nodes.empty(); }
};

/// Nodes with u > tau_pos having at least one interior stencil neighbor with
/// u <= tau_pos. Zero Dirichlet data alone does not make a free boundary.
inline FreeBoundary extract_free_boundary(const ScalarField& u) {
  const Grid& g = u.grid();
  FreeBoundary fb;
  fb.positivity_threshold = positivity_threshold(u);
  const double tau = fb.positivity_threshold;
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!g.in_domain(node) || u[node] <= tau) continue;
    bool touches_zero = false;
    g.for_each_neighbor(node, [&](std::size_t nb) {
      if (g.interior_index(nb) && u[nb] <= tau) touches_zero = true;
    });
    if (touches_zero) fb.nodes.push_back(node);
  }
  return fb;
}

/// A zero-set node adjacent to the free boundary, used to center ladders.
/// Picks the interface node nearest `hint` (the first one without a hint) and
/// returns its zero-side neighbor closest to the hint.
inline Point free_boundary_anchor(const ScalarField& u, const FreeBoundary& fb, std::optional<Point> hint = std::nullopt) {
  if (fb.empty()) throw InsufficientDataError("no free boundary to anchor on");
  const Grid& g = u.grid();
  const Point target = hint.value_or(g.coord(fb.nodes.front()));
  std::size_t best = fb.nodes.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t node : fb.nodes) {
    const double d = distance(g.coord(node), target, g.dim());
    if (d < best_d - 1e-12 * g.spacing()) {
      best_d = d;
      best = node;
    }
  }
  std::optional<std::size_t> zero;
  double zero_d = std::numeric_limits<double>::infinity();
  g.for_each_neighbor(best, [&](std::size_t nb) {
    if (!g.interior_index(nb) || u[nb] > fb.positivity_threshold) return;
    const double d = distance(g.coord(nb), target, g.dim());
    if (d < zero_d - 1e-12 * g.spacing()) {
      zero_d = d;
      zero = nb;
    }
  });
  if (!zero) throw InternalError("free boundary node without a zero-side neighbor");
  return g.coord(*zero);
}

// ---------------------------------------------------------------------------
// Growth and nondegeneracy ladders

enum class GrowthSide { UpperBoundCheck, LowerBoundCheck };

struct GrowthReport {
  Point center{};
  std::vector<double> radii;
  std::vector<double> sups;
  /// Lower bounds (c0 / 2N) r^(2 - N/q) per rung; empty for upper-bound checks.
  std::vector<double> bounds;
  double fitted_slope = 0.0;
  double predicted = 0.0;
  GrowthSide side = GrowthSide::UpperBoundCheck;
  double slack = 0.0;
  /// Indices of rungs that violate the lower bound.
  std::vector<std::size_t> violations;
  bool passed = false;
};

/// Least-squares slope of log y against log x.
inline double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InsufficientDataError("slope fit needs at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (!(sxx > 0.0)) throw InsufficientDataError("slope fit needs distinct radii");
  return sxy / sxx;
}

namespace detail {

inline void check_ladder(std::span<const double> radii) {
  if (radii.size() < 4) throw InsufficientDataError("radius ladder needs at least four rungs");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw ContractError("radius ladder must be strictly increasing");
}

inline void fit_surviving(GrowthReport& rep, double tau) {
  std::vector<double> rs, ss;
  for (std::size_t i = 0; i < rep.radii.size(); ++i)
    if (rep.sups[i] > tau) {
      rs.push_back(rep.radii[i]);
      ss.push_back(rep.sups[i]);
    }
  if (rs.size() < 4) throw InsufficientDataError("fewer than four rungs with positive sup");
  rep.fitted_slope = fit_loglog_slope(rs, ss);
}

} // namespace detail

/// Fits the decay of sup_{B_r(x0)} u as r shrinks. Passes when the fitted
/// slope is at least predicted - slack.
inline GrowthReport growth_upper_check(const ScalarField& u, const Point& x0, std::span<const double> radii, double q,
                                       double slack = 0.15) {
  detail::check_ladder(radii);
  GrowthReport rep;
  rep.center = x0;
  rep.side = GrowthSide::UpperBoundCheck;
  rep.predicted = predicted_growth_exponent(q, u.grid().dim());
  rep.slack = slack;
  rep.radii.assign(radii.begin(), radii.end());
  for (double r : radii) rep.sups.push_back(sup_over_ball(u, x0, r));
  detail::fit_surviving(rep, positivity_threshold(u));
  rep.passed = rep.fitted_slope >= rep.predicted - slack;
  return rep;
}

/// Compares the shell sup of u around x1 with (c0 / 2N) r^(2 - N/q) at every
/// rung. A rung fails when sup < bound (1 - slack).
inline GrowthReport nondegeneracy_check(const ScalarField& u, const Point& x1, std::span<const double> radii, double c0,
                                        double q, double slack = 0.1) {
  detail::check_ladder(radii);
  if (!(c0 > 0.0)) throw ContractError("nondegeneracy needs c0 > 0");
  const int dim = u.grid().dim();
  GrowthReport rep;
  rep.center = x1;
  rep.side = GrowthSide::LowerBoundCheck;
  rep.predicted = predicted_growth_exponent(q, dim);
  rep.slack = slack;
  rep.radii.assign(radii.begin(), radii.end());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double r = radii[i];
    const double sup = sup_over_sphere(u, x1, r);
    const double bound = c0 / (2.0 * dim) * std::pow(r, rep.predicted);
    rep.sups.push_back(sup);
    rep.bounds.push_back(bound);
    if (sup < bound * (1.0 - slack)) rep.violations.push_back(i);
  }
  detail::fit_surviving(rep, positivity_threshold(u));
  rep.passed = rep.violations.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// Barrier

struct BarrierReport {
  ScalarField v;
  std::size_t positive_nodes = 0;
  /// Positive-set interior nodes where Delta_h v > tol.
  std::size_t violating_nodes = 0;
  double superharmonic_fraction = 1.0;
  double max_laplacian = -std::numeric_limits<double>::infinity();
};

/// v = u - (c0 / 2N) |x - x'|^(2 - N/q), with the fraction of positive-set
/// nodes at which -Delta_h v >= -tol holds.
inline BarrierReport barrier_field(const ScalarField& u, const Point& x_prime, double c0, double q,
                                   std::optional<double> tol = std::nullopt) {
  const Grid& g = u.grid();
  const int dim = g.dim();
  const double beta = predicted_growth_exponent(q, dim);
  const double coeff = c0 / (2.0 * dim);
  std::vector<double> v(g.size());
  for (std::size_t node = 0; node < g.size(); ++node)
    v[node] = u[node] - coeff * std::pow(distance(g.coord(node), x_prime, dim), beta);
  BarrierReport rep{ScalarField(u.grid_ptr(), std::move(v))};
  const double t = tol.value_or(1e-8 * std::max(1.0, std::abs(c0)));
  const double tau = positivity_threshold(u);
  const auto lap = discrete_laplacian(rep.v);
  for (std::size_t node : g.interior_nodes()) {
    if (u[node] <= tau) continue;
    ++rep.positive_nodes;
    rep.max_laplacian = std::max(rep.max_laplacian, lap[node]);
    if (lap[node] > t) ++rep.violating_nodes;
  }
  if (rep.positive_nodes > 0)
    rep.superharmonic_fraction =
        1.0 - static_cast<double>(rep.violating_nodes) / static_cast<double>(rep.positive_nodes);
  return rep;
}

// ---------------------------------------------------------------------------
// Rescaling

/// The square [-1, 1]^N on which rescaled fields live.
inline GridPtr unit_ball_grid(int dim, int resolution) {
  return build_grid(dim == 1 ? DomainSpec{interval(-1.0, 1.0)} : DomainSpec{rectangle({-1.0, -1.0}, {1.0, 1.0})},
                    resolution);
}

/// u_r(y) = u(center + r y) / r^(2 - N/q) sampled on `unit` by multilinear
/// interpolation of u.
inline ScalarField rescale(const ScalarField& u, double r, double q, const Point& center, const GridPtr& unit) {
  const Grid& g = u.grid();
  if (unit->dim() != g.dim()) throw ContractError("unit grid dimension differs from the field's");
  if (!(r > 0.0) || r > 1.0) throw ContractError("rescaling radius must lie in (0, 1]");
  if (r < 2.0 * g.spacing()) throw ResolutionError("rescaling radius below two cells");
  if (!g.contains_ball(center, r)) throw DomainError("rescaling ball leaves the domain");
  const double norm = std::pow(r, predicted_growth_exponent(q, g.dim()));
  std::vector<double> out(unit->size());
  for (std::size_t node = 0; node < unit->size(); ++node) {
    const Point y = unit->coord(node);
    Point x = center;
    for (int k = 0; k < g.dim(); ++k) x[k] += r * y[k];
    out[node] = interpolate(u, x) / norm;
  }
  return ScalarField(unit, std::move(out));
}

/// Source seen by the rescaled field: r^(N/q) f(center + r y).
inline ScalarField rescale_source(const SourceTerm& f_bound, double r, double q, const Point& center,
                                  const GridPtr& unit) {
  const int dim = unit->dim();
  const double factor = std::isinf(q) ? 1.0 : std::pow(r, dim / q);
  return ScalarField::from_function(unit, [&](const Point& y) {
    Point x = center;
    for (int k = 0; k < dim; ++k) x[k] += r * y[k];
    return factor * f_bound(x);
  });
}

/// Mean over the unit-sphere shell of (y . grad_h w - degree w)^2.
inline double homogeneity_residual(const ScalarField& w, double degree) {
  const Grid& g = w.grid();
  const auto grad = discrete_gradient(w);
  const Point origin{0.0, 0.0};
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!detail::in_shell(g, node, origin, 1.0)) continue;
    const Point y = g.coord(node);
    double radial = 0.0;
    for (int k = 0; k < g.dim(); ++k) radial += y[k] * grad[node][k];
    const double e = radial - degree * w[node];
    s += e * e;
    ++count;
  }
  if (count == 0) throw ResolutionError("unit grid has no node on the unit sphere shell");
  return s / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Weiss energy

struct WeissComponents {
  double dirichlet = 0.0;
  double source = 0.0;
  double boundary = 0.0;
  double total = 0.0;
};

struct WeissProfile {
  std::vector<double> radii;
  /// Scale-invariant form computed on the rescaled field; canonical for verdicts.
  std::vector<WeissComponents> rescaled;
  /// Direct ball and sphere integrals with the prefactors r^-(N+6-2N/q),
  /// r^-(N+2-N/q), r^-(N+3-2N/q). Diagnostic only.
  std::vector<WeissComponents> raw;
  double tol_mono = 0.0;
  /// (r_k, W(r_k) - W(r_{k-1})) for every decrement below -tol_mono.
  std::vector<std::pair<double, double>> violations;

  std::vector<double> w_rescaled() const {
    std::vector<double> w;
    for (const auto& c : rescaled) w.push_back(c.total);
    return w;
  }
  bool monotone() const { return violations.empty(); }
};

/// Rescaled form:  int_{B1} (|grad u_r|^2 - f_r u_r) / 2 - int_{dB1} u_r^2 dS.
inline WeissComponents weiss_rescaled(const ScalarField& ur, const ScalarField& fr) {
  std::vector<double> prod(ur.size());
  std::vector<double> sq(ur.size());
  for (std::size_t i = 0; i < ur.size(); ++i) {
    prod[i] = fr[i] * std::max(ur[i], 0.0);
    sq[i] = ur[i] * ur[i];
  }
  const Point origin{0.0, 0.0};
  WeissComponents c;
  c.dirichlet = ball_dirichlet_energy(ur, origin, 1.0);
  c.source = 0.5 * ball_integral(ScalarField(ur.grid_ptr(), std::move(prod)), origin, 1.0);
  c.boundary = sphere_integral(ScalarField(ur.grid_ptr(), std::move(sq)), origin, 1.0);
  c.total = c.dirichlet - c.source - c.boundary;
  return c;
}

inline WeissComponents weiss_raw(const ScalarField& u, const SourceTerm& f_bound, double q, const Point& center,
                                 double r) {
  const Grid& g = u.grid();
  const int n = g.dim();
  const double nq = std::isinf(q) ? 0.0 : n / q;
  std::vector<double> prod(u.size());
  std::vector<double> sq(u.size());
  for (std::size_t node = 0; node < u.size(); ++node) {
    prod[node] = f_bound(g.coord(node)) * std::max(u[node], 0.0);
    sq[node] = u[node] * u[node];
  }
  WeissComponents c;
  c.dirichlet = ball_dirichlet_energy(u, center, r) / std::pow(r, n + 6.0 - 2.0 * nq);
  c.source = ball_integral(ScalarField(u.grid_ptr(), std::move(prod)), center, r) / std::pow(r, n + 2.0 - nq);
  c.boundary = sphere_integral(ScalarField(u.grid_ptr(), std::move(sq)), center, r) / std::pow(r, n + 3.0 - 2.0 * nq);
  c.total = c.dirichlet - c.source - c.boundary;
  return c;
}

/// Weiss ladder around `center`. Rungs below two cells are dropped.
inline WeissProfile weiss_profile(const ScalarField& u, const SourceTerm& f, double q, const Point& center,
                                  std::span<const double> radii, const GridPtr& unit, double tol_mono) {
  if (radii.size() < 5) throw InsufficientDataError("Weiss ladder needs at least five rungs");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw ContractError("Weiss radii must be strictly increasing");
  const Grid& g = u.grid();
  const auto fb = f.bound_to(g);
  WeissProfile prof;
  prof.tol_mono = tol_mono;
  for (double r : radii) {
    if (r < 2.0 * g.spacing()) continue;
    const auto ur = rescale(u, r, q, center, unit);
    const auto fr = rescale_source(fb, r, q, center, unit);
    prof.radii.push_back(r);
    prof.rescaled.push_back(weiss_rescaled(ur, fr));
    prof.raw.push_back(weiss_raw(u, fb, q, center, r));
  }
  if (prof.radii.size() < 2) throw InsufficientDataError("fewer than two Weiss rungs survive");
  for (std::size_t k = 1; k < prof.radii.size(); ++k) {
    const double dw = prof.rescaled[k].total - prof.rescaled[k - 1].total;
    if (dw < -tol_mono) prof.violations.emplace_back(prof.radii[k], dw);
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Blow-up

struct BlowupReport {
  std::vector<double> radii;
  std::vector<ScalarField> iterates;
  /// Entry n compares iterate n with iterate n-1; entry 0 is NaN.
  std::vector<double> c0_distances;
  std::vector<double> c1_distances;
  std::vector<double> residual_deg2;
  /// Residual against the rescaling degree 2 - N/q.
  std::vector<double> residual_deg_beta;
  double homogeneity_residual = 0.0;
  /// RMS of -Delta_h u_* - f_r and of -Delta_h u_* - 1 over positive interior
  /// unit-ball nodes of the last iterate.
  double laplacian_residual_source = 0.0;
  double laplacian_residual_one = 0.0;
};

/// Rescales u at `center` along a strictly decreasing schedule and measures
/// the convergence of the iterates and their homogeneity.
inline BlowupReport blowup_sequence(const ScalarField& u, const SourceTerm& f, double q, const Point& center,
                                    std::span<const double> schedule, const GridPtr& unit) {
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] < schedule[i - 1])) throw ContractError("blow-up schedule must be strictly decreasing");
  const Grid& g = u.grid();
  const int dim = g.dim();
  const double beta = predicted_growth_exponent(q, dim);
  const Point origin{0.0, 0.0};
  const auto fb = f.bound_to(g);

  BlowupReport rep;
  std::vector<std::vector<Vec2>> grads;
  for (double r : schedule) {
    if (r < 2.0 * g.spacing()) break;
    rep.radii.push_back(r);
    rep.iterates.push_back(rescale(u, r, q, center, unit));
    grads.push_back(discrete_gradient(rep.iterates.back()));
  }
  if (rep.iterates.size() < 3) throw ResolutionError("blow-up schedule exhausts the resolution before three iterates");

  const Grid& ug = *unit;
  const double tol = 1e-9 * ug.spacing();
  for (std::size_t n = 0; n < rep.iterates.size(); ++n) {
    const auto& cur = rep.iterates[n];
    rep.residual_deg2.push_back(homogeneity_residual(cur, 2.0));
    rep.residual_deg_beta.push_back(homogeneity_residual(cur, beta));
    if (n == 0) {
      rep.c0_distances.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.c1_distances.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const auto& prev = rep.iterates[n - 1];
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t node = 0; node < ug.size(); ++node) {
      if (distance(ug.coord(node), origin, dim) > 1.0 + tol) continue;
      d0 = std::max(d0, std::abs(cur[node] - prev[node]));
      double s = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double e = grads[n][node][k] - grads[n - 1][node][k];
        s += e * e;
      }
      d1 = std::max(d1, std::sqrt(s));
    }
    rep.c0_distances.push_back(d0);
    rep.c1_distances.push_back(d1);
  }
  rep.homogeneity_residual = rep.residual_deg2.back();

  const auto& last = rep.iterates.back();
  const auto fr = rescale_source(fb, rep.radii.back(), q, center, unit);
  const auto lap = discrete_laplacian(last);
  const double tau = positivity_threshold(last);
  double s_src = 0.0, s_one = 0.0;
  std::size_t count = 0;
  for (std::size_t node : ug.interior_nodes()) {
    if (distance(ug.coord(node), origin, dim) >= 1.0 || last[node] <= tau) continue;
    const double a = -lap[node] - fr[node];
    const double b = -lap[node] - 1.0;
    s_src += a * a;
    s_one += b * b;
    ++count;
  }
  if (count > 0) {
    rep.laplacian_residual_source = std::sqrt(s_src / static_cast<double>(count));
    rep.laplacian_residual_one = std::sqrt(s_one / static_cast<double>(count));
  }
  return rep;
}

} // namespace fblab
