#pragma once

// Uniform Cartesian grids in one and two dimensions, nodal scalar fields,
// (2N+1)-point stencils and node-indicator quadrature over balls and spheres.
//
// Node numbering is lexicographic with the first axis fastest:
// node = i + nx * j.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fblab/errors.hpp"

namespace fblab {

/// A point in R^N, N <= 2. Unused trailing coordinates are zero.
using Point = std::array<double, 2>;
using Vec2 = std::array<double, 2>;

/// Axis-aligned interval (dim 1) or rectangle (dim 2).
struct Box {
  int dim = 1;
  Point lo{};
  Point hi{};
};

/// Disc in the plane. Discretized by masking its bounding square.
struct Disc {
  Point center{};
  double radius = 1.0;
};

using DomainSpec = std::variant<Box, Disc>;

inline Box interval(double lo, double hi) { return Box{1, {lo, 0.0}, {hi, 0.0}}; }
inline Box rectangle(Point lo, Point hi) { return Box{2, lo, hi}; }
inline Disc disc(Point center, double radius) { return Disc{center, radius}; }

inline int domain_dimension(const DomainSpec& d) {
  return std::holds_alternative<Box>(d) ? std::get<Box>(d).dim : 2;
}

inline double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

class Grid;
using GridPtr = std::shared_ptr<const Grid>;
GridPtr build_grid(const DomainSpec& domain, int resolution);

class Grid {
public:
  int dim() const { return dim_; }
  double spacing() const { return h_; }
  std::array<int, 2> counts() const { return counts_; }
  std::size_t size() const { return boundary_.size(); }
  const DomainSpec& domain() const { return domain_; }
  const Point& origin() const { return origin_; }

  double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

  std::array<int, 2> multi_index(std::size_t node) const {
    const auto nx = static_cast<std::size_t>(counts_[0]);
    return {static_cast<int>(node % nx), static_cast<int>(node / nx)};
  }

  std::size_t flat(int i, int j = 0) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(counts_[0]) * static_cast<std::size_t>(j);
  }

  Point coord(std::size_t node) const {
    const auto [i, j] = multi_index(node);
    Point p{origin_[0] + h_ * i, 0.0};
    if (dim_ == 2) p[1] = origin_[1] + h_ * j;
    return p;
  }

  bool is_boundary(std::size_t node) const { return boundary_[node] != 0; }

  std::optional<std::size_t> interior_index(std::size_t node) const {
    const auto k = interior_index_[node];
    if (k < 0) return std::nullopt;
    return static_cast<std::size_t>(k);
  }

  std::span<const std::size_t> interior_nodes() const { return interior_nodes_; }
  std::size_t interior_count() const { return interior_nodes_.size(); }

  /// True when the node lies in the closed physical domain. Always true for boxes.
  bool in_domain(std::size_t node) const { return inside_[node] != 0; }

  bool contains_point(const Point& p) const {
    const double tol = 1e-9 * h_;
    if (const auto* box = std::get_if<Box>(&domain_)) {
      for (int k = 0; k < dim_; ++k)
        if (p[k] < box->lo[k] - tol || p[k] > box->hi[k] + tol) return false;
      return true;
    }
    const auto& d = std::get<Disc>(domain_);
    return distance(p, d.center, 2) <= d.radius + tol;
  }

  bool contains_ball(const Point& c, double r) const {
    const double tol = 1e-9 * h_;
    if (const auto* box = std::get_if<Box>(&domain_)) {
      for (int k = 0; k < dim_; ++k)
        if (c[k] - r < box->lo[k] - tol || c[k] + r > box->hi[k] + tol) return false;
      return true;
    }
    const auto& d = std::get<Disc>(domain_);
    return distance(c, d.center, 2) + r <= d.radius + tol;
  }

  /// Neighbor along `axis` in direction `dir` (+1 or -1), if it exists on the grid.
  std::optional<std::size_t> neighbor(std::size_t node, int axis, int dir) const {
    auto idx = multi_index(node);
    idx[axis] += dir;
    if (idx[axis] < 0 || idx[axis] >= counts_[axis]) return std::nullopt;
    return flat(idx[0], idx[1]);
  }

  template <class F>
  void for_each_neighbor(std::size_t node, F&& fn) const {
    for (int axis = 0; axis < dim_; ++axis)
      for (int dir : {-1, 1})
        if (auto nb = neighbor(node, axis, dir)) fn(*nb);
  }

  std::size_t nearest_node(const Point& p) const {
    std::array<int, 2> idx{0, 0};
    for (int k = 0; k < dim_; ++k) {
      const auto i = static_cast<int>(std::lround((p[k] - origin_[k]) / h_));
      idx[k] = std::clamp(i, 0, counts_[k] - 1);
    }
    return flat(idx[0], idx[1]);
  }

  /// Quadrature weight for integrals over the whole domain: tensor trapezoid
  /// weights on boxes, h^N on nodes inside a disc.
  double domain_weight(std::size_t node) const {
    if (!in_domain(node)) return 0.0;
    double w = cell_volume();
    if (std::holds_alternative<Box>(domain_)) {
      const auto idx = multi_index(node);
      for (int k = 0; k < dim_; ++k)
        if (idx[k] == 0 || idx[k] == counts_[k] - 1) w *= 0.5;
    }
    return w;
  }

  /// Weight of the edge (a, b) in the Dirichlet energy, zero if the edge is not
  /// part of the domain. On boxes, edges lying on the rectangle boundary carry
  /// half weight in the transverse direction.
  double edge_weight(std::size_t a, std::size_t b, int axis) const {
    if (!in_domain(a) || !in_domain(b)) return 0.0;
    double w = cell_volume();
    if (dim_ == 2 && std::holds_alternative<Box>(domain_)) {
      const int other = 1 - axis;
      const auto idx = multi_index(a);
      if (idx[other] == 0 || idx[other] == counts_[other] - 1) w *= 0.5;
    }
    return w;
  }

private:
  friend GridPtr build_grid(const DomainSpec& domain, int resolution);
  Grid() = default;

  int dim_ = 1;
  double h_ = 1.0;
  std::array<int, 2> counts_{1, 1};
  Point origin_{};
  DomainSpec domain_{};
  std::vector<char> boundary_;
  std::vector<char> inside_;
  std::vector<long> interior_index_;
  std::vector<std::size_t> interior_nodes_;
};

/// Builds the grid for `domain` with `resolution` nodes along the first axis.
/// Rectangles must have a second-axis extent that is a whole number of cells.
inline GridPtr build_grid(const DomainSpec& domain, int resolution) {
  if (resolution < 3) throw ConfigurationError("resolution must be at least 3, got " + std::to_string(resolution));

  auto g = std::shared_ptr<Grid>(new Grid());
  g->domain_ = domain;
  if (const auto* box = std::get_if<Box>(&domain)) {
    if (box->dim != 1 && box->dim != 2) throw ConfigurationError("box dimension must be 1 or 2");
    g->dim_ = box->dim;
    for (int k = 0; k < box->dim; ++k)
      if (!(box->hi[k] > box->lo[k])) throw ConfigurationError("domain extent must be positive on every axis");
    const double extent0 = box->hi[0] - box->lo[0];
    g->h_ = extent0 / (resolution - 1);
    g->counts_ = {resolution, 1};
    g->origin_ = {box->lo[0], box->dim == 2 ? box->lo[1] : 0.0};
    if (box->dim == 2) {
      const double extent1 = box->hi[1] - box->lo[1];
      const double cells = extent1 / g->h_;
      const auto rounded = std::lround(cells);
      if (rounded < 2 || std::abs(cells - static_cast<double>(rounded)) > 1e-9 * std::max(1.0, cells))
        throw ConfigurationError("second axis extent is not a whole number of cells (need at least 2) at this resolution");
      g->counts_[1] = static_cast<int>(rounded) + 1;
    }
  } else {
    const auto& d = std::get<Disc>(domain);
    if (!(d.radius > 0.0)) throw ConfigurationError("disc radius must be positive");
    g->dim_ = 2;
    g->h_ = 2.0 * d.radius / (resolution - 1);
    g->counts_ = {resolution, resolution};
    g->origin_ = {d.center[0] - d.radius, d.center[1] - d.radius};
  }

  const std::size_t n = static_cast<std::size_t>(g->counts_[0]) * static_cast<std::size_t>(g->counts_[1]);
  g->boundary_.assign(n, 1);
  g->inside_.assign(n, 1);
  g->interior_index_.assign(n, -1);

  if (const auto* d = std::get_if<Disc>(&domain)) {
    const double tol = 1e-12 * d->radius;
    for (std::size_t node = 0; node < n; ++node)
      g->inside_[node] = distance(g->coord(node), d->center, 2) <= d->radius + tol ? 1 : 0;
  }

  for (std::size_t node = 0; node < n; ++node) {
    if (!g->inside_[node]) continue;
    const auto idx = g->multi_index(node);
    bool interior = true;
    for (int k = 0; k < g->dim_; ++k)
      if (idx[k] == 0 || idx[k] == g->counts_[k] - 1) interior = false;
    if (interior)
      g->for_each_neighbor(node, [&](std::size_t nb) {
        if (!g->inside_[nb]) interior = false;
      });
    if (interior) {
      g->boundary_[node] = 0;
      g->interior_index_[node] = static_cast<long>(g->interior_nodes_.size());
      g->interior_nodes_.push_back(node);
    }
  }
  if (g->interior_nodes_.empty()) throw ConfigurationError("resolution too small: grid has no interior node");
  return g;
}

/// Nodal values on a grid. Immutable once built.
class ScalarField {
public:
  ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw ContractError("scalar field needs a grid");
    if (values_.size() != grid_->size()) throw ContractError("scalar field size does not match its grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw ContractError("scalar field contains a non-finite value");
  }

  static ScalarField constant(GridPtr grid, double value) {
    const auto n = grid->size();
    return ScalarField(std::move(grid), std::vector<double>(n, value));
  }

  template <class F>
  static ScalarField from_function(GridPtr grid, F&& fn) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid->coord(i));
    return ScalarField(std::move(grid), std::move(v));
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t node) const { return values_[node]; }
  std::size_t size() const { return values_.size(); }

  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }

private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Dirichlet data g, either as a closure or as one value per grid node
/// (only boundary entries are read).
class BoundaryData {
public:
  static BoundaryData constant(double value) {
    return BoundaryData([value](const Point&) { return value; });
  }
  static BoundaryData from_function(std::function<double(const Point&)> fn) { return BoundaryData(std::move(fn)); }
  static BoundaryData from_values(std::vector<double> per_node) {
    BoundaryData g;
    g.values_ = std::move(per_node);
    return g;
  }

  double at(const Grid& grid, std::size_t node) const {
    double v;
    if (fn_) {
      v = fn_(grid.coord(node));
    } else {
      if (values_.size() != grid.size()) throw ContractError("boundary values do not match the grid");
      v = values_[node];
    }
    if (!std::isfinite(v)) throw ContractError("boundary data is not finite");
    return v;
  }

  /// Max of g over the boundary nodes of `grid`.
  double max_on(const Grid& grid) const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t node = 0; node < grid.size(); ++node)
      if (grid.is_boundary(node)) m = std::max(m, at(grid, node));
    return m;
  }
  double min_on(const Grid& grid) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t node = 0; node < grid.size(); ++node)
      if (grid.is_boundary(node)) m = std::min(m, at(grid, node));
    return m;
  }

private:
  BoundaryData() = default;
  explicit BoundaryData(std::function<double(const Point&)> fn) : fn_(std::move(fn)) {}

  std::function<double(const Point&)> fn_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Stencils

/// (sum of neighbors - 2N center) / h^2 at interior nodes, zero on the boundary.
inline ScalarField discrete_laplacian(const ScalarField& u) {
  const Grid& g = u.grid();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t node : g.interior_nodes()) {
    double s = -2.0 * g.dim() * u[node];
    g.for_each_neighbor(node, [&](std::size_t nb) { s += u[nb]; });
    out[node] = s * inv_h2;
  }
  return ScalarField(u.grid_ptr(), std::move(out));
}

/// Half the weighted sum over grid edges of the squared difference quotient.
inline double dirichlet_energy(const Grid& g, std::span<const double> u) {
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  double e = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node)
    for (int axis = 0; axis < g.dim(); ++axis)
      if (auto nb = g.neighbor(node, axis, +1)) {
        const double d = u[*nb] - u[node];
        e += g.edge_weight(node, *nb, axis) * d * d * inv_h2;
      }
  return 0.5 * e;
}

inline double dirichlet_energy(const ScalarField& u) { return dirichlet_energy(u.grid(), u.values()); }

/// Trapezoid-weighted integral of nodal values over the domain.
inline double domain_integral(const ScalarField& field) {
  const Grid& g = field.grid();
  double s = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node) s += g.domain_weight(node) * field[node];
  return s;
}

namespace detail {

inline void require_ball(const Grid& g, const Point& center, double r) {
  if (!(r > 0.0)) throw DomainError("ball radius must be positive");
  if (!g.contains_ball(center, r)) throw DomainError("ball is not contained in the domain");
}

inline bool in_ball(const Grid& g, std::size_t node, const Point& center, double r) {
  return distance(g.coord(node), center, g.dim()) <= r + 1e-9 * g.spacing();
}

inline bool in_shell(const Grid& g, std::size_t node, const Point& center, double r) {
  const double half = 0.5 * g.spacing();
  const double tol = 1e-9 * g.spacing();
  const double d = distance(g.coord(node), center, g.dim());
  return d >= r - half - tol && d < r + half - tol;
}

/// Visits only the nodes of the bounding box of B_r(center).
template <class F>
void for_each_node_near(const Grid& g, const Point& center, double reach, F&& fn) {
  std::array<int, 2> lo{0, 0}, hi{0, 0};
  for (int k = 0; k < g.dim(); ++k) {
    lo[k] = std::max(0, static_cast<int>(std::floor((center[k] - reach - g.origin()[k]) / g.spacing())) - 1);
    hi[k] = std::min(g.counts()[k] - 1, static_cast<int>(std::ceil((center[k] + reach - g.origin()[k]) / g.spacing())) + 1);
  }
  for (int j = lo[1]; j <= hi[1]; ++j)
    for (int i = lo[0]; i <= hi[0]; ++i) fn(g.flat(i, j));
}

inline double sphere_measure(int dim, double r) { return dim == 1 ? 2.0 : 2.0 * std::numbers::pi * r; }

} // namespace detail

/// Sum of nodal values times cell volume over nodes in the closed ball.
inline double ball_integral(const ScalarField& field, const Point& center, double r) {
  const Grid& g = field.grid();
  detail::require_ball(g, center, r);
  double s = 0.0;
  detail::for_each_node_near(g, center, r, [&](std::size_t node) {
    if (detail::in_ball(g, node, center, r)) s += field[node];
  });
  return s * g.cell_volume();
}

/// Dirichlet energy restricted to the edges whose midpoint lies in the ball.
inline double ball_dirichlet_energy(const ScalarField& u, const Point& center, double r) {
  const Grid& g = u.grid();
  detail::require_ball(g, center, r);
  const double h = g.spacing();
  const double w = g.cell_volume() / (h * h);
  double e = 0.0;
  detail::for_each_node_near(g, center, r, [&](std::size_t node) {
    for (int axis = 0; axis < g.dim(); ++axis) {
      auto nb = g.neighbor(node, axis, +1);
      if (!nb) continue;
      Point mid = g.coord(node);
      mid[axis] += 0.5 * h;
      if (distance(mid, center, g.dim()) > r + 1e-9 * h) continue;
      const double d = u[*nb] - u[node];
      e += d * d;
    }
  });
  return 0.5 * w * e;
}

/// Shell quadrature of the field over the sphere of radius r: mean nodal value
/// on {r - h/2 <= |x - c| < r + h/2} times the measure of the sphere.
inline double sphere_integral(const ScalarField& field, const Point& center, double r) {
  const Grid& g = field.grid();
  detail::require_ball(g, center, r);
  if (r < 0.5 * g.spacing()) throw ResolutionError("sphere radius below half a cell: shell is empty");
  double s = 0.0;
  std::size_t count = 0;
  detail::for_each_node_near(g, center, r + g.spacing(), [&](std::size_t node) {
    if (detail::in_shell(g, node, center, r)) {
      s += field[node];
      ++count;
    }
  });
  if (count == 0) throw ResolutionError("no grid node falls in the sphere shell");
  return s / static_cast<double>(count) * detail::sphere_measure(g.dim(), r);
}

inline double sup_over_ball(const ScalarField& u, const Point& center, double r) {
  const Grid& g = u.grid();
  detail::require_ball(g, center, r);
  double m = -std::numeric_limits<double>::infinity();
  detail::for_each_node_near(g, center, r, [&](std::size_t node) {
    if (detail::in_ball(g, node, center, r)) m = std::max(m, u[node]);
  });
  if (!std::isfinite(m)) throw ResolutionError("no grid node falls in the ball");
  return m;
}

/// Maximum nodal value on the shell of radius r (the discrete sup over the sphere).
inline double sup_over_sphere(const ScalarField& u, const Point& center, double r) {
  const Grid& g = u.grid();
  detail::require_ball(g, center, r);
  double m = -std::numeric_limits<double>::infinity();
  detail::for_each_node_near(g, center, r + g.spacing(), [&](std::size_t node) {
    if (detail::in_shell(g, node, center, r)) m = std::max(m, u[node]);
  });
  if (!std::isfinite(m)) throw ResolutionError("no grid node falls in the sphere shell");
  return m;
}

/// Multilinear interpolation; points outside the grid box are clamped onto it.
inline double interpolate(const ScalarField& u, const Point& p) {
  const Grid& g = u.grid();
  const double h = g.spacing();
  std::array<int, 2> i0{0, 0};
  std::array<double, 2> t{0.0, 0.0};
  for (int k = 0; k < g.dim(); ++k) {
    const int n = g.counts()[k];
    double s = std::clamp((p[k] - g.origin()[k]) / h, 0.0, static_cast<double>(n - 1));
    int i = std::min(static_cast<int>(std::floor(s)), n - 2);
    i0[k] = i;
    t[k] = s - i;
  }
  if (g.dim() == 1) return (1.0 - t[0]) * u[g.flat(i0[0])] + t[0] * u[g.flat(i0[0] + 1)];
  const double v00 = u[g.flat(i0[0], i0[1])];
  const double v10 = u[g.flat(i0[0] + 1, i0[1])];
  const double v01 = u[g.flat(i0[0], i0[1] + 1)];
  const double v11 = u[g.flat(i0[0] + 1, i0[1] + 1)];
  return (1.0 - t[1]) * ((1.0 - t[0]) * v00 + t[0] * v10) + t[1] * ((1.0 - t[0]) * v01 + t[0] * v11);
}

/// Nodal gradient by central differences, second-order one-sided at the grid edges.
inline std::vector<Vec2> discrete_gradient(const ScalarField& u) {
  const Grid& g = u.grid();
  const double h = g.spacing();
  std::vector<Vec2> grad(g.size(), Vec2{0.0, 0.0});
  for (std::size_t node = 0; node < g.size(); ++node) {
    for (int axis = 0; axis < g.dim(); ++axis) {
      const auto m1 = g.neighbor(node, axis, -1);
      const auto p1 = g.neighbor(node, axis, +1);
      if (m1 && p1) {
        grad[node][axis] = (u[*p1] - u[*m1]) / (2.0 * h);
      } else if (p1) {
        const auto p2 = g.neighbor(*p1, axis, +1);
        grad[node][axis] = p2 ? (-3.0 * u[node] + 4.0 * u[*p1] - u[*p2]) / (2.0 * h) : (u[*p1] - u[node]) / h;
      } else if (m1) {
        const auto m2 = g.neighbor(*m1, axis, -1);
        grad[node][axis] = m2 ? (3.0 * u[node] - 4.0 * u[*m1] + u[*m2]) / (2.0 * h) : (u[node] - u[*m1]) / h;
      }
    }
  }
  return grad;
}

} // namespace fblab
