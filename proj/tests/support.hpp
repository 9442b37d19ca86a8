#pragma once

// Shared fixtures for the test suites. Closed forms are written out here so
// the tests compare against them rather than against library output.

#include <algorithm>
#include <cmath>
#include <vector>

#include "fblab/solver.hpp"

namespace fblab::test {

/// u = (|x| - 0.5)_+^2 on [-1, 1]: f = -2, g = 0.25 at both ends.
inline double fixture_a_exact(double x) {
  const double d = std::max(std::abs(x) - 0.5, 0.0);
  return d * d;
}

inline SourceTerm fixture_a_source() { return SourceTerm::constant(-2.0, 1).with_lower_bound(2.0); }

inline SolveReport solve_fixture_a(int resolution) {
  auto grid = build_grid(interval(-1.0, 1.0), resolution);
  SolveOptions o;
  o.auto_omega = true;
  return solve(grid, fixture_a_source(), BoundaryData::constant(0.25), o);
}

/// 2D unit disc, f = -1 except +1 on x >= 0.6, g = 0.1.
inline SourceTerm fixture_b_source() {
  return SourceTerm::piecewise(-1.0, {SourceRegion{{0.6, -1.0}, {1.0, 1.0}, 1.0}}, 2);
}

/// Piecewise-linear interpolant error against `exact`, sampled `per_cell`
/// points per cell on a 1D grid.
template <class F>
double interpolated_sup_error(const ScalarField& u, F&& exact, int per_cell = 8) {
  const Grid& g = u.grid();
  const double h = g.spacing();
  double err = 0.0;
  for (int i = 0; i + 1 < g.counts()[0]; ++i)
    for (int s = 0; s <= per_cell; ++s) {
      const double t = static_cast<double>(s) / per_cell;
      const double x = g.coord(g.flat(i))[0] + t * h;
      const double uh = (1.0 - t) * u[g.flat(i)] + t * u[g.flat(i + 1)];
      err = std::max(err, std::abs(uh - exact(x)));
    }
  return err;
}

} // namespace fblab::test
