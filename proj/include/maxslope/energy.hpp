#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>

#include "maxslope/cbo.hpp"
#include "maxslope/error.hpp"
#include "maxslope/geometry.hpp"

namespace maxslope {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// E = E^d + E^c: a C^1 part given by value and gradient, plus an optional
// indicator of an l-infinity box. The underlying space carries the norm `space`.
class Energy {
 public:
  using ValueFn = std::function<double(const Point&)>;
  using GradientFn = std::function<Point(const Point&)>;

  Energy(ValueFn value, GradientFn gradient, PNorm space = PNorm::infinity(),
         std::optional<BoxConstraint> indicator = std::nullopt)
      : value_(std::move(value)), gradient_(std::move(gradient)), space_(space), indicator_(std::move(indicator)) {}

  double smooth_value(const Point& x) const { return value_(x); }
  Point smooth_gradient(const Point& x) const { return gradient_(x); }

  PNorm space_norm() const { return space_; }
  const std::optional<BoxConstraint>& indicator() const { return indicator_; }

  Energy with_indicator(std::optional<BoxConstraint> box) const {
    Energy e = *this;
    e.indicator_ = std::move(box);
    return e;
  }

  Energy with_space(PNorm p) const {
    Energy e = *this;
    e.space_ = p;
    return e;
  }

 private:
  ValueFn value_;
  GradientFn gradient_;
  PNorm space_;
  std::optional<BoxConstraint> indicator_;
};

inline double eval(const Energy& e, const Point& x) {
  if (e.indicator() && !e.indicator()->contains(x)) return kInfinity;
  return e.smooth_value(x);
}

// E^sl(x; z) = E^d(z) + <grad E^d(z), x - z> + E^c(x).
struct SemiLinearization {
  Point anchor;
  double anchor_value = 0.0;
  Point anchor_gradient;
  std::optional<BoxConstraint> indicator;

  double operator()(const Point& x) const {
    if (indicator && !indicator->contains(x)) return kInfinity;
    return anchor_value + dot(anchor_gradient, x - anchor);
  }
};

inline SemiLinearization semi_linearize(const Energy& e, const Point& z) {
  return {z, e.smooth_value(z), e.smooth_gradient(z), e.indicator()};
}

// Relative tolerance deciding when an indicator face is active.
inline constexpr double kActiveFaceTolerance = 1e-9;

// Local slope |dE|(x): the dual norm of the minimal-norm element of
// grad E^d(x) + N(x), N the normal cone of the indicator box. Only the
// (l-infinity space, l-infinity box) pairing has a closed form when a face is
// active.
inline double slope(const Energy& e, const Point& x) {
  const Point g = e.smooth_gradient(x);
  const PNorm dual = dual_exponent(e.space_norm());
  if (!e.indicator()) return norm(g, dual);

  const BoxConstraint& box = *e.indicator();
  if (!box.contains(x)) throw InfiniteEnergy("slope: point lies outside the indicator box");
  const IntervalBox faces = box.intervals();
  const double tol = kActiveFaceTolerance * std::max(1.0, box.radius);
  bool any_active = false;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool upper = std::abs(x[i] - faces.upper[i]) <= tol;
    const bool lower = std::abs(x[i] - faces.lower[i]) <= tol;
    if (upper && lower) {
      // Degenerate interval: the normal cone is the whole line.
      any_active = true;
    } else if (upper) {
      any_active = true;
      total += std::max(g[i], 0.0);
    } else if (lower) {
      any_active = true;
      total += std::max(-g[i], 0.0);
    } else {
      total += std::abs(g[i]);
    }
  }
  if (!any_active) return norm(g, dual);
  if (!e.space_norm().is_infinity()) {
    throw UndefinedSlope("slope: active box constraint is only supported in the l-infinity space");
  }
  return total;
}

// Feasible search box for the closed tau-ball around x intersected with the
// indicator box. For finite p the box is the bounding l-infinity box and the
// ball itself is enforced through the objective.
inline IntervalBox ball_search_box(const Energy& e, const Point& x, double tau) {
  IntervalBox box = BoxConstraint(x, tau).intervals();
  if (e.indicator()) box = box_intersect(box, e.indicator()->intervals());
  return box;
}

// Minimizes `objective` over the closed tau-ball of the space norm around x
// (intersected with the indicator box). The center is always a candidate, so
// the returned value never exceeds objective(x).
inline Minimum ball_minimize(const Energy& e, const Objective& objective, const Point& x, double tau,
                             const InnerSolver& solver, std::uint64_t stream = 0) {
  if (!(tau >= 0.0)) throw InvalidArgument("ball_minimize: radius must be >= 0");
  Minimum center{x, objective(x)};
  if (tau == 0.0) return center;
  const IntervalBox box = ball_search_box(e, x, tau);
  Minimum found;
  try {
    if (e.space_norm().is_infinity()) {
      found = solver(objective, box, stream);
    } else {
      const PNorm p = e.space_norm();
      Objective masked = [&](const Point& y) { return norm(y - x, p) <= tau ? objective(y) : kInfinity; };
      found = solver(masked, box, stream);
    }
  } catch (const SolverFailure&) {
    throw;
  } catch (const Error& err) {
    throw SolverFailure(std::string("inner solver failed: ") + err.what());
  }
  return found.value < center.value ? found : center;
}

inline Minimum ball_minimize(const Energy& e, const Point& x, double tau, const InnerSolver& solver,
                             std::uint64_t stream = 0) {
  return ball_minimize(e, [&e](const Point& y) { return eval(e, y); }, x, tau, solver, stream);
}

// E_tau(x): the minimum of E over the closed tau-ball around x.
inline double e_tau(const Energy& e, const Point& x, double tau, const InnerSolver& solver,
                    std::uint64_t stream = 0) {
  if (!(tau > 0.0)) throw InvalidArgument("e_tau: tau must be > 0");
  return ball_minimize(e, x, tau, solver, stream).value;
}

// 1/2 |x - shift|_2^2, the workhorse test energy.
inline Energy quadratic_energy(PNorm space = PNorm::infinity(), std::optional<Point> shift = std::nullopt) {
  auto value = [shift](const Point& x) {
    const Point d = shift ? x - *shift : x;
    return 0.5 * dot(d, d);
  };
  auto gradient = [shift](const Point& x) { return shift ? x - *shift : x; };
  return Energy(value, gradient, space);
}

// <w, x> + b.
inline Energy linear_energy(Point w, double offset = 0.0, PNorm space = PNorm::infinity()) {
  auto value = [w, offset](const Point& x) { return dot(w, x) + offset; };
  auto gradient = [w](const Point&) { return w; };
  return Energy(value, gradient, space);
}

}  // namespace maxslope
