#pragma once

// Analytic source models f with a declared integrability exponent q.

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "fblab/errors.hpp"
#include "fblab/geometry.hpp"

namespace fblab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct ConstantSource {
  double value = 0.0;
};

/// One axis-aligned box carrying a constant value.
struct SourceRegion {
  Point lo{};
  Point hi{};
  double value = 0.0;
};

/// First region containing the point wins; `fallback` elsewhere.
struct PiecewiseSource {
  double fallback = 0.0;
  std::vector<SourceRegion> regions;
};

/// amplitude * |x - center|^(-gamma), magnitude capped at `cap`.
struct RadialSingularSource {
  double amplitude = 1.0;
  Point center{};
  double gamma = 0.0;
  std::optional<double> cap;
};

/// Experimental stand-in for a point mass: a smooth compactly supported bump
/// of radius `width` and total integral `mass`.
struct MollifiedPointMass {
  Point center{};
  double width = 0.1;
  double mass = 1.0;
  double normalization = 1.0;
};

using SourceModel = std::variant<ConstantSource, PiecewiseSource, RadialSingularSource, MollifiedPointMass>;

/// Declared lower bound |f| >= c0 used by nondegeneracy runs. The magnitude
/// is bounded because free boundaries only form where f is nonpositive in the
/// zero set; see the fixture notes in README.
struct LowerBound {
  double c0 = 0.0;
  std::optional<Box> region;
};

class SourceTerm {
public:
  static SourceTerm constant(double value, int dim, double q = kInfinity) {
    return SourceTerm(ConstantSource{value}, dim, q);
  }

  static SourceTerm piecewise(double fallback, std::vector<SourceRegion> regions, int dim, double q = kInfinity) {
    for (const auto& r : regions)
      for (int k = 0; k < dim; ++k)
        if (!(r.hi[k] > r.lo[k])) throw ConfigurationError("piecewise source region has empty extent");
    return SourceTerm(PiecewiseSource{fallback, std::move(regions)}, dim, q);
  }

  static SourceTerm radial_singular(double amplitude, Point center, double gamma, int dim, double q,
                                    std::optional<double> cap = std::nullopt) {
    if (gamma < 0.0) throw ConfigurationError("singularity exponent gamma must be nonnegative");
    if (std::isfinite(q) && !(gamma * q < dim))
      throw ConfigurationError("radial-singular source is not in L^q: need gamma * q < N");
    if (cap && !(*cap > 0.0)) throw ConfigurationError("singularity cap must be positive");
    return SourceTerm(RadialSingularSource{amplitude, center, gamma, cap}, dim, q);
  }

  static SourceTerm mollified_point_mass(Point center, double width, int dim, double mass = 1.0) {
    if (!(width > 0.0)) throw ConfigurationError("mollifier width must be positive");
    MollifiedPointMass m{center, width, mass, 1.0};
    // Unit-width bump integral by composite Simpson on the radial profile.
    const int n = 4000;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const double bump = t < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
      s += w * bump * (dim == 1 ? 2.0 : 2.0 * std::numbers::pi * t);
    }
    s /= 3.0 * n;
    m.normalization = 1.0 / (s * std::pow(width, dim));
    return SourceTerm(m, dim, kInfinity);
  }

  /// Copy carrying a declared lower bound; verified analytically against the model.
  SourceTerm with_lower_bound(double c0, std::optional<Box> region = std::nullopt) const {
    if (!(c0 > 0.0)) throw ConfigurationError("c0 must be positive");
    SourceTerm s = *this;
    s.lower_ = LowerBound{c0, region};
    s.check_lower_bound();
    return s;
  }

  /// Copy whose singular cap defaults to |amplitude| * h^(-gamma) if unset.
  SourceTerm bound_to(const Grid& grid) const {
    SourceTerm s = *this;
    if (auto* rs = std::get_if<RadialSingularSource>(&s.model_); rs && !rs->cap) {
      const double amp = std::abs(rs->amplitude);
      rs->cap = std::max(amp, 1e-300) * std::pow(grid.spacing(), -rs->gamma);
    }
    return s;
  }

  /// Amplitude multiplied by t (the cap scales along with it).
  SourceTerm scaled(double t) const {
    SourceTerm s = *this;
    std::visit(
        [t](auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ConstantSource>) {
            m.value *= t;
          } else if constexpr (std::is_same_v<T, PiecewiseSource>) {
            m.fallback *= t;
            for (auto& r : m.regions) r.value *= t;
          } else if constexpr (std::is_same_v<T, RadialSingularSource>) {
            m.amplitude *= t;
            if (m.cap) *m.cap *= std::abs(t);
          } else {
            m.mass *= t;
          }
        },
        s.model_);
    if (s.lower_) s.lower_.reset();
    return s;
  }

  double q() const { return q_; }
  int dim() const { return dim_; }
  const SourceModel& model() const { return model_; }
  const std::optional<LowerBound>& lower_bound() const { return lower_; }
  bool experimental() const { return std::holds_alternative<MollifiedPointMass>(model_); }

  double operator()(const Point& x) const {
    return std::visit(
        [&](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ConstantSource>) {
            return m.value;
          } else if constexpr (std::is_same_v<T, PiecewiseSource>) {
            for (const auto& r : m.regions)
              if (in_box(x, r.lo, r.hi)) return r.value;
            return m.fallback;
          } else if constexpr (std::is_same_v<T, RadialSingularSource>) {
            if (!m.cap) throw ContractError("radial-singular source has no cap; bind it to a grid first");
            const double d = distance(x, m.center, dim_);
            const double mag = std::abs(m.amplitude);
            const double v = d > 0.0 ? std::min(mag * std::pow(d, -m.gamma), *m.cap) : *m.cap;
            return m.amplitude < 0.0 ? -v : v;
          } else {
            const double t = distance(x, m.center, dim_) / m.width;
            if (t >= 1.0) return 0.0;
            return m.mass * m.normalization * std::exp(-1.0 / (1.0 - t * t));
          }
        },
        model_);
  }

  /// Max |f| over the in-domain nodes of `grid`.
  double sup_abs(const Grid& grid) const {
    double m = 0.0;
    for (std::size_t node = 0; node < grid.size(); ++node)
      if (grid.in_domain(node)) m = std::max(m, std::abs((*this)(grid.coord(node))));
    return m;
  }

  std::vector<double> sample(const Grid& grid) const {
    std::vector<double> v(grid.size());
    for (std::size_t node = 0; node < grid.size(); ++node) v[node] = (*this)(grid.coord(node));
    return v;
  }

private:
  SourceTerm(SourceModel model, int dim, double q) : model_(std::move(model)), dim_(dim), q_(q) {
    if (dim != 1 && dim != 2) throw ConfigurationError("source dimension must be 1 or 2");
    if (std::isnan(q) || !(q > 0.0)) throw ConfigurationError("integrability exponent q must be positive");
  }

  bool in_box(const Point& x, const Point& lo, const Point& hi) const {
    for (int k = 0; k < dim_; ++k)
      if (x[k] < lo[k] || x[k] > hi[k]) return false;
    return true;
  }

  bool boxes_overlap(const Point& alo, const Point& ahi, const Point& blo, const Point& bhi) const {
    for (int k = 0; k < dim_; ++k)
      if (ahi[k] < blo[k] || bhi[k] < alo[k]) return false;
    return true;
  }

  bool box_covers(const Point& outer_lo, const Point& outer_hi, const Point& lo, const Point& hi) const {
    for (int k = 0; k < dim_; ++k)
      if (outer_lo[k] > lo[k] || outer_hi[k] < hi[k]) return false;
    return true;
  }

  void check_lower_bound() const {
    const double c0 = lower_->c0;
    const auto& region = lower_->region;
    const auto fail = [&] { throw ConfigurationError("source does not satisfy |f| >= c0 on its declared region"); };
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ConstantSource>) {
            if (std::abs(m.value) < c0) fail();
          } else if constexpr (std::is_same_v<T, PiecewiseSource>) {
            bool covered = false;
            for (const auto& r : m.regions) {
              if (!region || boxes_overlap(r.lo, r.hi, region->lo, region->hi)) {
                if (std::abs(r.value) < c0) fail();
                if (region && box_covers(r.lo, r.hi, region->lo, region->hi)) covered = true;
              }
            }
            if (!covered && std::abs(m.fallback) < c0) fail();
          } else if constexpr (std::is_same_v<T, RadialSingularSource>) {
            if (!region) throw ConfigurationError("a radial-singular lower bound needs a declared region");
            // |f| is smallest at the region corner farthest from the center.
            double far2 = 0.0;
            for (int k = 0; k < dim_; ++k) {
              const double a = std::abs(region->lo[k] - m.center[k]);
              const double b = std::abs(region->hi[k] - m.center[k]);
              far2 += std::max(a, b) * std::max(a, b);
            }
            if (std::abs(m.amplitude) * std::pow(std::sqrt(far2), -m.gamma) < c0) fail();
          } else {
            throw ConfigurationError("the mollified point mass has no positive lower bound");
          }
        },
        model_);
  }

  SourceModel model_;
  int dim_ = 1;
  double q_ = kInfinity;
  std::optional<LowerBound> lower_;
};

inline double evaluate(const SourceTerm& f, const Point& x) { return f(x); }

/// Discrete L^q norm with domain quadrature weights; q = inf gives the nodal max.
inline double lq_norm(const SourceTerm& f, const Grid& grid, double q) {
  if (!(q >= 1.0)) throw ConfigurationError("lq_norm needs q >= 1");
  if (std::isinf(q)) return f.sup_abs(grid);
  double s = 0.0;
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const double w = grid.domain_weight(node);
    if (w > 0.0) s += w * std::pow(std::abs(f(grid.coord(node))), q);
  }
  return std::pow(s, 1.0 / q);
}

/// 2 - N/q, the growth rate of u at free boundary points. Only meaningful for
/// q > N/2; below that the bound degenerates.
inline double predicted_growth_exponent(double q, int dim) {
  const double half = 0.5 * dim;
  if (std::isinf(q)) return 2.0;
  if (std::abs(q - half) <= 1e-12 * half)
    throw RegimeError("q = N/2: the growth of u at the free boundary is inconclusive");
  if (q < half)
    throw RegimeError("q < N/2: u grows rapidly at the free boundary and Hoelder continuity is out of reach");
  return 2.0 - dim / q;
}

inline double predicted_growth_exponent(const SourceTerm& f) { return predicted_growth_exponent(f.q(), f.dim()); }

/// Hoelder exponent of the gradient. When N/q is an integer every exponent
/// below one is attainable and `alpha` is empty.
struct HolderExponent {
  std::optional<double> alpha;

  bool any_below_one() const { return !alpha.has_value(); }
  std::string tag() const {
    if (!alpha) return "any-below-one";
    if (*alpha == 1.0) return "C^{1,1}";
    char buf[64];
    std::snprintf(buf, sizeof buf, "C^{1,%.6g}", *alpha);
    return buf;
  }
};

inline HolderExponent predicted_holder_exponent(double q, int dim) {
  if (std::isinf(q)) return {1.0};
  const double half = 0.5 * dim;
  if (!(q > half && q <= dim * (1.0 + 1e-12)))
    throw RegimeError("Hoelder exponent is only predicted for N/2 < q <= N or q = inf");
  const double ratio = dim / q;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-12 * std::max(1.0, ratio)) return {std::nullopt};
  return {1.0 - ratio + std::floor(ratio)};
}

} // namespace fblab
