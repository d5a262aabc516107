#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "maxslope/cbo.hpp"
#include "maxslope/energy.hpp"
#include "maxslope/error.hpp"
#include "maxslope/geometry.hpp"
#include "maxslope/io.hpp"

namespace maxslope {

enum class Interpolation { piecewise_constant, affine };

// Iterates x^0..x^n of a time-discrete flow with step size tau.
struct Trajectory {
  Point x0;
  double tau = 0.0;
  std::vector<Point> iterates;
  PNorm space_norm = PNorm::infinity();

  std::size_t steps() const { return iterates.empty() ? 0 : iterates.size() - 1; }
  double horizon() const { return static_cast<double>(steps()) * tau; }

  // Piecewise constant: x^k on (t^{k-1}, t^k], i.e. x^{ceil(t/tau)}.
  // Affine: linear between neighbouring iterates. Times past the horizon
  // return the last iterate.
  Point at(double t, Interpolation mode = Interpolation::piecewise_constant) const {
    if (iterates.empty()) throw InvalidArgument("trajectory is empty");
    if (t <= 0.0) return iterates.front();
    const double s = t / tau;
    if (s >= static_cast<double>(steps())) return iterates.back();
    if (mode == Interpolation::piecewise_constant) {
      return iterates[static_cast<std::size_t>(std::ceil(s))];
    }
    const auto k = static_cast<std::size_t>(std::floor(s));
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * iterates[k] + w * iterates[k + 1];
  }
};

namespace detail {

inline void require_step(double tau) {
  if (!(tau > 0.0) || std::isinf(tau)) throw InvalidArgument("step size tau must be finite and > 0");
}

inline Trajectory start_trajectory(const Point& x0, double tau, std::size_t steps, PNorm p) {
  Trajectory traj{x0, tau, {}, p};
  traj.iterates.reserve(steps + 1);
  traj.iterates.push_back(x0);
  return traj;
}

}  // namespace detail

// One-step attack x0 + eps * sign(grad l): ascent on the loss.
inline Point fgsm_step(const Point& loss_gradient, const Point& x0, double eps) {
  if (!(eps >= 0.0)) throw InvalidArgument("fgsm: budget must be >= 0");
  return x0 + eps * sign(loss_gradient);
}

using LossGradient = std::function<Point(const Point&)>;

// x^{k+1} = Clip_{x0,eps}(x^k + tau sign(grad l(x^k))).
inline Trajectory ifgsm(const LossGradient& loss_gradient, const Point& x0, double eps, double tau,
                        std::size_t steps) {
  if (!(eps > 0.0)) throw InvalidArgument("ifgsm: budget must be > 0");
  detail::require_step(tau);
  const IntervalBox budget = BoxConstraint(x0, eps).intervals();
  Trajectory traj = detail::start_trajectory(x0, tau, steps, PNorm::infinity());
  for (std::size_t k = 0; k < steps; ++k) {
    const Point& x = traj.iterates.back();
    traj.iterates.push_back(budget.clamp(x + tau * sign(loss_gradient(x))));
  }
  return traj;
}

// x - tau * J(grad E^d(x)), J the dual-norm argmax for the space exponent p.
inline Point ngd_step(const Energy& e, const Point& x, double tau, PNorm p) {
  detail::require_step(tau);
  return x - tau * dual_argmax(e.smooth_gradient(x), p);
}

// Explicit normalized gradient descent in the energy's space norm, ignoring
// any indicator.
inline Trajectory ngd(const Energy& e, const Point& x0, double tau, std::size_t steps) {
  detail::require_step(tau);
  Trajectory traj = detail::start_trajectory(x0, tau, steps, e.space_norm());
  for (std::size_t k = 0; k < steps; ++k) traj.iterates.push_back(ngd_step(e, traj.iterates.back(), tau, e.space_norm()));
  return traj;
}

// Each step minimizes the semi-linearization E^sl(.; x^k) over the tau-ball.
// Closed forms: the normalized gradient step without an indicator, and the
// clipped signed step for an l-infinity box in l-infinity space. Other
// combinations go through the inner solver.
inline Trajectory semi_implicit_minmove(const Energy& e, const Point& x0, double tau, std::size_t steps,
                                        const InnerSolver& solver, std::uint64_t stream_base = 0) {
  detail::require_step(tau);
  if (!e.indicator()) return ngd(e, x0, tau, steps);
  Trajectory traj = detail::start_trajectory(x0, tau, steps, e.space_norm());
  if (e.space_norm().is_infinity()) {
    const IntervalBox budget = e.indicator()->intervals();
    for (std::size_t k = 0; k < steps; ++k) {
      const Point& x = traj.iterates.back();
      traj.iterates.push_back(budget.clamp(x - tau * sign(e.smooth_gradient(x))));
    }
    return traj;
  }
  for (std::size_t k = 0; k < steps; ++k) {
    const Point& x = traj.iterates.back();
    const SemiLinearization lin = semi_linearize(e, x);
    traj.iterates.push_back(ball_minimize(e, lin, x, tau, solver, stream_base + k).argmin);
  }
  return traj;
}

// x^{k+1} in argmin { E(y) : |y - x^k| <= tau }, solved by the inner solver on
// the ball intersected with the indicator box.
inline Trajectory minimizing_movement(const Energy& e, const Point& x0, double tau, std::size_t steps,
                                      const InnerSolver& solver, std::uint64_t stream_base = 0) {
  detail::require_step(tau);
  if (!std::isfinite(eval(e, x0))) throw InfiniteEnergy("minimizing_movement: x0 is outside the energy domain");
  Trajectory traj = detail::start_trajectory(x0, tau, steps, e.space_norm());
  for (std::size_t k = 0; k < steps; ++k) {
    traj.iterates.push_back(ball_minimize(e, traj.iterates.back(), tau, solver, stream_base + k).argmin);
  }
  return traj;
}

// Variational interpolation: for t in [t^{k-1}, t^k) the minimizer of E over
// the ball of radius t - t^{k-1} around x^{k-1}; grid times return the
// iterate itself, t = n tau returns x^n.
inline Point de_giorgi_interpolate(const Energy& e, const Trajectory& traj, double t, const InnerSolver& solver,
                                   std::uint64_t stream = 0) {
  if (!(t >= 0.0) || t > traj.horizon() + 1e-12 * std::max(1.0, traj.horizon())) {
    throw InvalidArgument("de_giorgi_interpolate: time outside [0, n tau]");
  }
  const double s = t / traj.tau;
  if (s >= static_cast<double>(traj.steps())) return traj.iterates.back();
  const auto k = static_cast<std::size_t>(std::floor(s));
  const double radius = t - static_cast<double>(k) * traj.tau;
  if (radius <= 0.0) return traj.iterates[k];
  return ball_minimize(e, traj.iterates[k], radius, solver, stream).argmin;
}

struct FlowDiagnostics {
  std::vector<double> energies;               // E(x^k), k = 0..n
  std::vector<double> slopes;                 // |dE|(x^k), k = 0..n
  std::vector<double> metric_derivatives;     // |x^k - x^{k-1}| / tau, k = 1..n
  std::vector<double> dissipation_residuals;  // E(x^{k+1}) - E(x^k) + tau |dE|(x^k), k = 0..n-1
  std::vector<double> cumulative_residuals;   // E(x^k) - E(x^0) + tau sum_{j<k} |dE|(x^j), k = 0..n
};

inline FlowDiagnostics diagnostics(const Energy& e, const Trajectory& traj) {
  FlowDiagnostics d;
  const std::size_t n = traj.iterates.size();
  d.energies.reserve(n);
  d.slopes.reserve(n);
  for (const Point& x : traj.iterates) {
    d.energies.push_back(eval(e, x));
    d.slopes.push_back(slope(e, x));
  }
  double integral = 0.0;
  d.cumulative_residuals.push_back(0.0);
  for (std::size_t k = 1; k < n; ++k) {
    d.metric_derivatives.push_back(norm(traj.iterates[k] - traj.iterates[k - 1], traj.space_norm) / traj.tau);
    d.dissipation_residuals.push_back(d.energies[k] - d.energies[k - 1] + traj.tau * d.slopes[k - 1]);
    integral += traj.tau * d.slopes[k - 1];
    d.cumulative_residuals.push_back(d.energies[k] - d.energies[0] + integral);
  }
  return d;
}

// max_k |a^k - b^k|_inf over k >= 1.
inline double max_deviation(const Trajectory& a, const Trajectory& b) {
  if (a.iterates.size() != b.iterates.size() || a.tau != b.tau) {
    throw LengthMismatch("trajectories differ in step count or step size");
  }
  double worst = 0.0;
  for (std::size_t k = 1; k < a.iterates.size(); ++k) {
    worst = std::max(worst, norm(a.iterates[k] - b.iterates[k], PNorm::infinity()));
  }
  return worst;
}

// e_tau = (1/S) sum_s max_k |a_s^k - b_s^k|_inf.
inline double averaged_max_deviation(std::span<const Trajectory> a, std::span<const Trajectory> b) {
  if (a.size() != b.size() || a.empty()) throw LengthMismatch("error study: sample counts differ or are zero");
  double total = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) total += max_deviation(a[s], b[s]);
  return total / static_cast<double>(a.size());
}

// Columns: k, t, x_1..x_d, energy, slope, metric_derivative (0 for k = 0).
inline std::string trajectory_csv(const Trajectory& traj, const FlowDiagnostics& diag) {
  const std::size_t dim = traj.x0.size();
  std::string out = "k,t";
  for (std::size_t i = 1; i <= dim; ++i) out += ",x_" + std::to_string(i);
  out += ",energy,slope,metric_derivative\n";
  for (std::size_t k = 0; k < traj.iterates.size(); ++k) {
    out += std::to_string(k) + "," + io::format_double(static_cast<double>(k) * traj.tau);
    for (double v : traj.iterates[k]) out += "," + io::format_double(v);
    out += "," + io::format_double(diag.energies[k]) + "," + io::format_double(diag.slopes[k]) + "," +
           io::format_double(k == 0 ? 0.0 : diag.metric_derivatives[k - 1]) + "\n";
  }
  return out;
}

}  // namespace maxslope
