#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "maxslope/error.hpp"
#include "maxslope/geometry.hpp"

namespace maxslope {

// Scalar objective over a box. +inf marks infeasible points; NaN is an error.
using Objective = std::function<double(const Point&)>;

struct Minimum {
  Point argmin;
  double value = std::numeric_limits<double>::infinity();
};

// Minimizes an objective over a box. `stream` selects an independent random
// stream so repeated calls inside one flow stay reproducible.
using InnerSolver = std::function<Minimum(const Objective&, const IntervalBox&, std::uint64_t stream)>;

struct CboConfig {
  std::size_t particle_count = 30;
  double noise_scale = 2.0;
  double time_step = 0.01;
  double weight_sharpness = 1e8;
  std::size_t inner_steps = 30;
  double drift_rate = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (particle_count < 2) throw InvalidArgument("cbo: particle_count must be >= 2");
    if (!(time_step >= 0.0) || !(noise_scale >= 0.0)) throw InvalidArgument("cbo: dt and sigma must be >= 0");
    if (!(weight_sharpness > 0.0)) throw InvalidArgument("cbo: alpha must be > 0");
  }
};

struct Ensemble {
  std::vector<Point> particles;
  std::vector<double> values;
};

namespace detail {

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

inline double checked_eval(const Objective& f, const Point& x) {
  const double v = f(x);
  if (std::isnan(v)) throw NonFiniteObjective("cbo: objective returned NaN");
  return v;
}

}  // namespace detail

// Weighted mean with weights exp(-alpha (E_i - min_j E_j)); infinite values get
// weight zero.
inline Point consensus_point(std::span<const Point> particles, std::span<const double> values, double alpha) {
  if (particles.empty() || particles.size() != values.size()) {
    throw InvalidArgument("consensus_point: particle/value count mismatch");
  }
  double best = std::numeric_limits<double>::infinity();
  for (double v : values) best = std::min(best, v);
  if (!std::isfinite(best)) throw NonFiniteObjective("consensus_point: no finite objective value");

  const std::size_t dim = particles.front().size();
  std::vector<double> acc(dim, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if (!std::isfinite(values[i])) continue;
    const double w = std::exp(-alpha * (values[i] - best));
    if (w == 0.0) continue;
    total += w;
    for (std::size_t j = 0; j < dim; ++j) acc[j] += w * particles[i][j];
  }
  for (double& a : acc) a /= total;
  return Point(std::move(acc));
}

// One projected step: x_i <- x_i - lambda dt (x_i - c) + sigma sqrt(dt) |x_i - c|_2 zeta_i,
// followed by clipping into `feasible` and re-evaluation.
inline Ensemble cbo_step(Ensemble ens, const Objective& objective, const CboConfig& cfg,
                         const IntervalBox& feasible, std::mt19937_64& rng) {
  const Point c = consensus_point(ens.particles, ens.values, cfg.weight_sharpness);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise = cfg.noise_scale * std::sqrt(cfg.time_step);
  for (std::size_t i = 0; i < ens.particles.size(); ++i) {
    Point& x = ens.particles[i];
    const Point diff = x - c;
    const double dist = norm(diff, PNorm::of(2.0));
    std::vector<double> moved(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      moved[j] = x[j] - cfg.drift_rate * cfg.time_step * diff[j] + noise * dist * gauss(rng);
    }
    x = feasible.clamp(Point(std::move(moved)));
    ens.values[i] = detail::checked_eval(objective, x);
  }
  return ens;
}

// Runs inner_steps projected CBO steps from a uniform initialization in the
// box and returns the best particle ever evaluated.
inline Minimum cbo_minimize(const Objective& objective, const IntervalBox& feasible, const CboConfig& cfg,
                            std::uint64_t stream = 0) {
  cfg.validate();
  auto rng = detail::make_rng(cfg.seed, stream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Ensemble ens;
  ens.particles.reserve(cfg.particle_count);
  for (std::size_t i = 0; i < cfg.particle_count; ++i) {
    std::vector<double> x(feasible.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = feasible.lower[j] + (feasible.upper[j] - feasible.lower[j]) * unit(rng);
    }
    ens.particles.push_back(feasible.clamp(Point(std::move(x))));
    ens.values.push_back(detail::checked_eval(objective, ens.particles.back()));
  }

  Minimum best;
  auto record = [&best](const Ensemble& e) {
    for (std::size_t i = 0; i < e.values.size(); ++i) {
      if (e.values[i] < best.value) best = {e.particles[i], e.values[i]};
    }
  };
  record(ens);
  if (!std::isfinite(best.value)) throw SolverFailure("cbo: no feasible particle in the initial ensemble");
  for (std::size_t step = 0; step < cfg.inner_steps; ++step) {
    ens = cbo_step(std::move(ens), objective, cfg, feasible, rng);
    record(ens);
  }
  return best;
}

inline InnerSolver make_cbo_solver(CboConfig cfg) {
  cfg.validate();
  return [cfg](const Objective& f, const IntervalBox& box, std::uint64_t stream) {
    return cbo_minimize(f, box, cfg, stream);
  };
}

// Exhaustive search over a tensor grid with `resolution` nodes per axis,
// endpoints included. Ties keep the first node in lexicographic order.
inline Minimum grid_minimize(const Objective& objective, const IntervalBox& box, std::size_t resolution) {
  if (resolution < 2) throw InvalidArgument("grid_minimize: resolution must be >= 2");
  const std::size_t dim = box.size();
  std::vector<std::size_t> index(dim, 0);
  Minimum best;
  std::vector<double> x(dim);
  while (true) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double frac = static_cast<double>(index[j]) / static_cast<double>(resolution - 1);
      x[j] = index[j] + 1 == resolution ? box.upper[j] : box.lower[j] + frac * (box.upper[j] - box.lower[j]);
    }
    Point p(x);
    const double v = detail::checked_eval(objective, p);
    if (v < best.value) best = {std::move(p), v};
    std::size_t j = 0;
    while (j < dim && ++index[j] == resolution) index[j++] = 0;
    if (j == dim) break;
  }
  if (!std::isfinite(best.value)) throw SolverFailure("grid_minimize: no feasible grid node");
  return best;
}

inline InnerSolver make_grid_solver(std::size_t resolution) {
  return [resolution](const Objective& f, const IntervalBox& box, std::uint64_t) {
    return grid_minimize(f, box, resolution);
  };
}

// Minimizes over a fixed candidate set restricted to the box (first minimum
// wins). Used for lattice-restricted flows.
inline InnerSolver make_candidate_solver(std::vector<Point> candidates) {
  return [candidates = std::move(candidates)](const Objective& f, const IntervalBox& box, std::uint64_t) {
    Minimum best;
    for (const Point& c : candidates) {
      if (!box.contains(c)) continue;
      const double v = detail::checked_eval(f, c);
      if (v < best.value) best = {c, v};
    }
    if (!std::isfinite(best.value)) throw SolverFailure("candidate solver: no feasible candidate in box");
    return best;
  };
}

}  // namespace maxslope
