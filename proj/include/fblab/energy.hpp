#pragma once

// The energy I(u) = 1/2 int |grad u|^2 - int f u^+, its first variation and
// the fiber map t -> I(t u).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fblab/errors.hpp"
#include "fblab/geometry.hpp"
#include "fblab/source.hpp"

namespace fblab {

struct EnergyBreakdown {
  double dirichlet = 0.0;
  double source = 0.0;
  double total = 0.0;
};

/// Threshold separating {u > 0} from {u = 0} on the grid.
inline double positivity_threshold(const ScalarField& u) { return 1e-12 * std::max(1.0, u.max()); }

/// Source pairing sum_i w_i f_i max(u_i, 0) with pre-sampled nodal f.
inline double source_pairing(const Grid& g, std::span<const double> u, std::span<const double> f_nodes) {
  double s = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node) s += g.domain_weight(node) * f_nodes[node] * std::max(u[node], 0.0);
  return s;
}

inline EnergyBreakdown energy(const Grid& g, std::span<const double> u, std::span<const double> f_nodes) {
  EnergyBreakdown e;
  e.dirichlet = dirichlet_energy(g, u);
  e.source = source_pairing(g, u, f_nodes);
  e.total = e.dirichlet - e.source;
  return e;
}

inline EnergyBreakdown energy(const ScalarField& u, std::span<const double> f_nodes) {
  EnergyBreakdown e;
  e.dirichlet = dirichlet_energy(u);
  e.source = source_pairing(u.grid(), u.values(), f_nodes);
  e.total = e.dirichlet - e.source;
  return e;
}

inline EnergyBreakdown energy(const ScalarField& u, const SourceTerm& f) {
  const auto fb = f.bound_to(u.grid());
  return energy(u, fb.sample(u.grid()));
}

/// -Delta_h u - f chi{u > tau_pos} at interior nodes, zero on the boundary.
inline ScalarField energy_subgradient(const ScalarField& u, const SourceTerm& f, const BoundaryData& g) {
  const Grid& grid = u.grid();
  const auto fb = f.bound_to(grid);
  double scale = 1.0;
  for (std::size_t node = 0; node < grid.size(); ++node)
    if (grid.is_boundary(node)) scale = std::max(scale, std::abs(g.at(grid, node)));
  for (std::size_t node = 0; node < grid.size(); ++node) {
    if (!grid.is_boundary(node)) continue;
    if (std::abs(u[node] - g.at(grid, node)) > 1e-12 * scale)
      throw ContractError("field does not match the boundary data");
  }
  const double tau = positivity_threshold(u);
  const auto lap = discrete_laplacian(u);
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t node : grid.interior_nodes()) {
    const double chi = u[node] > tau ? 1.0 : 0.0;
    out[node] = -lap[node] - fb(grid.coord(node)) * chi;
  }
  return ScalarField(u.grid_ptr(), std::move(out));
}

/// Minimizer of the fiber parabola I(t u) = t^2/2 |u|^2 - t int f u, where
/// |u|^2 is the Dirichlet seminorm squared.
inline double fiber_critical_t(const ScalarField& u, const SourceTerm& f) {
  const double seminorm2 = 2.0 * dirichlet_energy(u);
  if (!(seminorm2 > 0.0)) throw DegenerateInputError("fiber map needs a field with nonzero gradient");
  const auto fb = f.bound_to(u.grid());
  const auto fv = fb.sample(u.grid());
  double pairing = 0.0;
  for (std::size_t node = 0; node < u.size(); ++node) pairing += u.grid().domain_weight(node) * fv[node] * u[node];
  return pairing / seminorm2;
}

inline ScalarField scale_field(const ScalarField& u, double t) {
  std::vector<double> v(u.values().begin(), u.values().end());
  for (double& x : v) x *= t;
  return ScalarField(u.grid_ptr(), std::move(v));
}

} // namespace fblab
