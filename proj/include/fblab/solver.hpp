#pragma once

// Nonnegative energy minimizer with Dirichlet data, computed as the solution of
// the discrete linear complementarity problem
//
//   u >= 0,  r = -Delta_h u - f >= 0,  u * r = 0   at interior nodes,
//
// by projected Gauss-Seidel / SOR sweeps. Also hosts the exhaustive
// active-set oracle used to cross-check the sweeps on tiny grids.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fblab/energy.hpp"
#include "fblab/errors.hpp"
#include "fblab/geometry.hpp"
#include "fblab/source.hpp"

namespace fblab {

enum class SolveMethod { ProjectedGaussSeidel, ProjectedSor };

struct SolveOptions {
  SolveMethod method = SolveMethod::ProjectedSor;
  double omega = 1.5;
  /// Use 2 / (1 + sin(pi / (n - 1))) for the largest axis count n instead of `omega`.
  bool auto_omega = false;
  /// Defaults to 200 * (largest node count per axis).
  std::optional<int> max_iters;
  /// Defaults to 1e-10 * max(1, sup |f|).
  std::optional<double> tol_residual;
  double tol_uniqueness = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (method == SolveMethod::ProjectedSor && !auto_omega && !(omega > 0.0 && omega < 2.0))
      throw ConfigurationError("SOR relaxation factor must lie in (0, 2)");
    if (max_iters && *max_iters <= 0) throw ConfigurationError("max_iters must be positive");
    if (tol_residual && !(*tol_residual > 0.0)) throw ConfigurationError("tol_residual must be positive");
    if (!(tol_uniqueness > 0.0)) throw ConfigurationError("tol_uniqueness must be positive");
  }
};

struct SolveReport {
  ScalarField u;
  int iterations = 0;
  double final_kkt_residual = 0.0;
  /// energy_trace[0] is I of the initial guess, entry k is I after sweep k.
  std::vector<double> energy_trace{};
  std::vector<double> kkt_trace{};
  bool converged = false;
  /// Stopping tolerance actually applied (tol_residual, raised to the
  /// floating-point floor of the stencil when that is larger).
  double tolerance = 0.0;
  double omega = 1.0;
};

inline double optimal_sor_omega(const Grid& g) {
  const int n = std::max(g.counts()[0], g.counts()[1]);
  return 2.0 / (1.0 + std::sin(std::numbers::pi / (n - 1)));
}

/// max_i |min(D u_i, r_i)| over interior nodes, with D = 2N / h^2 the stencil
/// diagonal so both arguments carry the units of f.
inline double kkt_residual(const Grid& g, std::span<const double> u, std::span<const double> f_nodes) {
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  const double diag = 2.0 * g.dim() * inv_h2;
  double worst = 0.0;
  for (std::size_t node : g.interior_nodes()) {
    double s = 2.0 * g.dim() * u[node];
    g.for_each_neighbor(node, [&](std::size_t nb) { s -= u[nb]; });
    const double r = s * inv_h2 - f_nodes[node];
    worst = std::max(worst, std::abs(std::min(diag * u[node], r)));
  }
  return worst;
}

inline double kkt_residual(const ScalarField& u, const SourceTerm& f) {
  const auto fb = f.bound_to(u.grid());
  return kkt_residual(u.grid(), u.values(), fb.sample(u.grid()));
}

namespace detail {

inline std::vector<double> boundary_start(const Grid& grid, const BoundaryData& g) {
  std::vector<double> u(grid.size(), 0.0);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    if (!grid.is_boundary(node)) continue;
    const double v = g.at(grid, node);
    if (v < 0.0) throw AdmissibilityError("boundary data must be nonnegative; the admissible set is empty");
    u[node] = v;
  }
  return u;
}

} // namespace detail

/// Runs projected sweeps from `initial` (interior values) or from zero.
inline SolveReport solve(const GridPtr& grid_ptr, const SourceTerm& f, const BoundaryData& g, const SolveOptions& opts,
                         const std::optional<std::vector<double>>& initial = std::nullopt) {
  opts.validate();
  const Grid& grid = *grid_ptr;
  const auto fb = f.bound_to(grid);
  const auto f_nodes = fb.sample(grid);

  auto u = detail::boundary_start(grid, g);
  if (initial) {
    if (initial->size() != grid.size()) throw ContractError("initial guess does not match the grid");
    for (std::size_t node : grid.interior_nodes()) u[node] = std::max(0.0, (*initial)[node]);
  }

  const int n_axis = std::max(grid.counts()[0], grid.counts()[1]);
  const int max_iters = opts.max_iters.value_or(200 * n_axis);
  const double f_scale = std::max(1.0, fb.sup_abs(grid));
  const double tol = opts.tol_residual.value_or(1e-10 * f_scale);
  double omega = 1.0;
  if (opts.method == SolveMethod::ProjectedSor) omega = opts.auto_omega ? optimal_sor_omega(grid) : opts.omega;

  const double h2 = grid.spacing() * grid.spacing();
  const double two_n = 2.0 * grid.dim();
  const double diag = two_n / h2;
  double g_scale = 0.0;
  for (std::size_t node = 0; node < grid.size(); ++node)
    if (grid.is_boundary(node)) g_scale = std::max(g_scale, std::abs(u[node]));

  SolveReport rep{.u = ScalarField::constant(grid_ptr, 0.0)};
  rep.omega = omega;
  rep.energy_trace.push_back(energy(grid, u, f_nodes).total);

  for (int it = 1; it <= max_iters; ++it) {
    for (std::size_t node : grid.interior_nodes()) {
      double s = h2 * f_nodes[node];
      grid.for_each_neighbor(node, [&](std::size_t nb) { s += u[nb]; });
      const double gs = s / two_n;
      u[node] = std::max(0.0, u[node] + omega * (gs - u[node]));
    }
    const double kkt = kkt_residual(grid, u, f_nodes);
    rep.energy_trace.push_back(energy(grid, u, f_nodes).total);
    rep.kkt_trace.push_back(kkt);
    rep.iterations = it;
    rep.final_kkt_residual = kkt;

    double u_scale = g_scale;
    for (std::size_t node : grid.interior_nodes()) u_scale = std::max(u_scale, u[node]);
    // Rounding in the stencil limits how small r can get.
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * diag * u_scale;
    rep.tolerance = std::max(tol, floor);
    if (kkt <= rep.tolerance) {
      rep.converged = true;
      break;
    }
  }
  rep.u = ScalarField(grid_ptr, std::move(u));
  return rep;
}

/// Solves from `trials` random nonnegative starts and returns the largest
/// pairwise sup-norm distance between the converged fields.
inline double verify_uniqueness(const GridPtr& grid_ptr, const SourceTerm& f, const BoundaryData& g,
                                const SolveOptions& opts, int trials) {
  if (trials < 2) throw ContractError("uniqueness check needs at least two trials");
  const Grid& grid = *grid_ptr;
  const double hi = std::max(0.0, g.max_on(grid)) + 1.0;
  std::vector<std::vector<double>> solutions;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(opts.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t + 1));
    std::uniform_real_distribution<double> dist(0.0, hi);
    std::vector<double> init(grid.size(), 0.0);
    for (std::size_t node : grid.interior_nodes()) init[node] = dist(rng);
    auto rep = solve(grid_ptr, f, g, opts, init);
    if (!rep.converged)
      throw InconclusiveError("uniqueness trial " + std::to_string(t) + " did not converge");
    solutions.emplace_back(rep.u.values().begin(), rep.u.values().end());
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < solutions.size(); ++a)
    for (std::size_t b = a + 1; b < solutions.size(); ++b)
      for (std::size_t node = 0; node < grid.size(); ++node)
        worst = std::max(worst, std::abs(solutions[a][node] - solutions[b][node]));
  return worst;
}

/// Exact discrete solution by enumerating every active set on grids with at
/// most 14 interior nodes.
inline ScalarField exact_small_oracle(const GridPtr& grid_ptr, const SourceTerm& f, const BoundaryData& g) {
  const Grid& grid = *grid_ptr;
  const auto interior = grid.interior_nodes();
  const std::size_t k = interior.size();
  if (k > 14) throw ContractError("exhaustive oracle is limited to 14 interior nodes");

  const auto fb = f.bound_to(grid);
  const auto f_nodes = fb.sample(grid);
  const auto base = detail::boundary_start(grid, g);
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  const double diag = 2.0 * grid.dim() * inv_h2;

  double scale = std::max(1.0, fb.sup_abs(grid));
  for (double v : base) scale = std::max(scale, v * diag);
  const double feas_tol = 1e-11 * scale;

  std::optional<std::vector<double>> best;
  double best_energy = std::numeric_limits<double>::infinity();

  for (std::uint32_t pinned = 0; pinned < (1u << k); ++pinned) {
    std::vector<int> free_slot(k, -1);
    std::vector<std::size_t> free_nodes;
    for (std::size_t a = 0; a < k; ++a)
      if (!(pinned & (1u << a))) {
        free_slot[a] = static_cast<int>(free_nodes.size());
        free_nodes.push_back(interior[a]);
      }

    std::vector<double> u = base;
    const auto m = static_cast<Eigen::Index>(free_nodes.size());
    if (m > 0) {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
      Eigen::VectorXd b(m);
      for (Eigen::Index row = 0; row < m; ++row) {
        const std::size_t node = free_nodes[static_cast<std::size_t>(row)];
        A(row, row) = diag;
        b(row) = f_nodes[node];
        grid.for_each_neighbor(node, [&](std::size_t nb) {
          if (grid.is_boundary(nb)) {
            b(row) += base[nb] * inv_h2;
          } else if (const int col = free_slot[*grid.interior_index(nb)]; col >= 0) {
            A(row, col) -= inv_h2;
          }
        });
      }
      const Eigen::VectorXd x = A.llt().solve(b);
      for (Eigen::Index row = 0; row < m; ++row) u[free_nodes[static_cast<std::size_t>(row)]] = x(row);
    }

    bool feasible = true;
    for (std::size_t a = 0; a < k && feasible; ++a) {
      const std::size_t node = interior[a];
      if (free_slot[a] >= 0) {
        if (u[node] * diag < -feas_tol) feasible = false;
      } else {
        double s = 2.0 * grid.dim() * u[node];
        grid.for_each_neighbor(node, [&](std::size_t nb) { s -= u[nb]; });
        if (s * inv_h2 - f_nodes[node] < -feas_tol) feasible = false;
      }
    }
    if (!feasible) continue;
    for (std::size_t node : interior) u[node] = std::max(0.0, u[node]);
    const double e = energy(grid, u, f_nodes).total;
    if (e < best_energy) {
      best_energy = e;
      best = std::move(u);
    }
  }
  if (!best) throw InternalError("no feasible active set found for nonnegative boundary data");
  return ScalarField(grid_ptr, std::move(*best));
}

} // namespace fblab
