#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "maxslope/cbo.hpp"
#include "maxslope/energy.hpp"
#include "maxslope/error.hpp"
#include "maxslope/geometry.hpp"
#include "maxslope/io.hpp"
#include "maxslope/parallel.hpp"
#include "maxslope/schemes.hpp"

namespace maxslope {

// Equal-weight empirical measure (1/n) sum_i delta_{x_i}, optionally labeled.
struct ParticleCloud {
  std::vector<Point> points;
  std::optional<std::vector<int>> labels;

  std::size_t size() const { return points.size(); }
  std::optional<int> label(std::size_t i) const {
    return labels ? std::optional<int>((*labels)[i]) : std::nullopt;
  }

  void validate() const {
    if (points.empty()) throw InvalidArgument("particle cloud must hold at least one point");
    if (labels && labels->size() != points.size()) throw InvalidArgument("particle cloud: label count mismatch");
  }
};

// Raised when a per-particle computation fails; carries the particle index.
class ParticleError : public Error {
 public:
  ParticleError(std::size_t index, const std::string& what)
      : Error("particle " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

struct BottleneckPlan {
  std::vector<std::size_t> target_of;  // source i is matched with target target_of[i]
  double value = 0.0;
};

namespace detail {

// Kuhn augmenting paths on the graph {(i, j) : cost(i, j) <= threshold}.
class ThresholdMatcher {
 public:
  explicit ThresholdMatcher(const std::vector<std::vector<double>>& cost) : cost_(cost), n_(cost.size()) {}

  std::optional<std::vector<std::size_t>> perfect_matching(double threshold) {
    threshold_ = threshold;
    match_of_target_.assign(n_, kNone);
    for (std::size_t i = 0; i < n_; ++i) {
      seen_.assign(n_, false);
      if (!augment(i)) return std::nullopt;
    }
    std::vector<std::size_t> target_of(n_);
    for (std::size_t j = 0; j < n_; ++j) target_of[match_of_target_[j]] = j;
    return target_of;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  bool augment(std::size_t i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (seen_[j] || !(cost_[i][j] <= threshold_)) continue;
      seen_[j] = true;
      if (match_of_target_[j] == kNone || augment(match_of_target_[j])) {
        match_of_target_[j] = i;
        return true;
      }
    }
    return false;
  }

  const std::vector<std::vector<double>>& cost_;
  std::size_t n_;
  double threshold_ = 0.0;
  std::vector<std::size_t> match_of_target_;
  std::vector<bool> seen_;
};

}  // namespace detail

// Extended transport cost: |x - z|_p when labels agree (or are absent), +inf otherwise.
inline std::vector<std::vector<double>> transport_costs(const ParticleCloud& a, const ParticleCloud& b, PNorm p) {
  std::vector<std::vector<double>> cost(a.size(), std::vector<double>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      cost[i][j] = a.label(i) == b.label(j) ? norm(a.points[i] - b.points[j], p) : kInfinity;
    }
  }
  return cost;
}

// Infinity-Wasserstein distance between equal-size equal-weight clouds: the
// bottleneck assignment value, found by binary search over the sorted finite
// costs with a perfect-matching feasibility test.
inline BottleneckPlan w_infty(const ParticleCloud& a, const ParticleCloud& b, PNorm p = PNorm::infinity()) {
  a.validate();
  b.validate();
  if (a.size() != b.size()) throw InvalidArgument("w_infty: clouds must have equal size");
  if (a.labels.has_value() != b.labels.has_value()) throw InvalidArgument("w_infty: labels present on only one cloud");

  const auto cost = transport_costs(a, b, p);
  std::vector<double> candidates;
  for (const auto& row : cost)
    for (double c : row)
      if (std::isfinite(c)) candidates.push_back(c);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  detail::ThresholdMatcher matcher(cost);
  if (candidates.empty() || !matcher.perfect_matching(candidates.back())) {
    throw InfeasibleMatching("w_infty: no finite-cost coupling (label histograms differ)");
  }
  std::size_t lo = 0, hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (matcher.perfect_matching(candidates[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  BottleneckPlan plan;
  plan.target_of = *matcher.perfect_matching(candidates[lo]);
  plan.value = 0.0;
  for (std::size_t i = 0; i < plan.target_of.size(); ++i) plan.value = std::max(plan.value, cost[i][plan.target_of[i]]);
  return plan;
}

// Energy of a particle given its label.
using CloudEnergy = std::function<Energy(std::optional<int> label)>;

// Potential energy (1/n) sum_i E(x_i).
inline double potential_energy(const ParticleCloud& cloud, const CloudEnergy& energy) {
  cloud.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double v = eval(energy(cloud.label(i)), cloud.points[i]);
    if (!std::isfinite(v)) throw InfiniteEnergy("potential_energy: particle " + std::to_string(i) + " outside domain");
    total += v;
  }
  return total / static_cast<double>(cloud.size());
}

inline double potential_energy(const ParticleCloud& cloud, const Energy& e) {
  return potential_energy(cloud, [&e](std::optional<int>) { return e; });
}

// Slope of the potential energy: (1/n) sum_i |dE|(x_i).
inline double cloud_slope(const ParticleCloud& cloud, const CloudEnergy& energy) {
  cloud.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) total += slope(energy(cloud.label(i)), cloud.points[i]);
  return total / static_cast<double>(cloud.size());
}

inline double cloud_slope(const ParticleCloud& cloud, const Energy& e) {
  return cloud_slope(cloud, [&e](std::optional<int>) { return e; });
}

enum class CloudScheme { minmove, semi_implicit, ifgsm };

inline CloudScheme parse_cloud_scheme(const std::string& s) {
  if (s == "minmove") return CloudScheme::minmove;
  if (s == "semi-implicit" || s == "semi_implicit") return CloudScheme::semi_implicit;
  if (s == "ifgsm") return CloudScheme::ifgsm;
  throw InvalidArgument("unknown scheme '" + s + "'");
}

struct PushforwardOptions {
  CloudScheme scheme = CloudScheme::minmove;
  double tau = 0.1;
  std::size_t steps = 1;
  // Per-particle indicator mode: box of this radius around each particle's
  // starting point. Without it the budget is enforced by the time horizon.
  std::optional<double> budget;
};

struct CloudFlow {
  std::vector<ParticleCloud> clouds;      // one per time step, k = 0..steps
  std::vector<Trajectory> trajectories;   // one per particle
  std::vector<Energy> energies;           // per-particle energy actually flowed
};

// Stream offset separating the random streams of different particles.
inline constexpr std::uint64_t kParticleStreamStride = std::uint64_t{1} << 32;

inline Energy particle_energy(const ParticleCloud& cloud, std::size_t i, const CloudEnergy& energy,
                              const PushforwardOptions& opts) {
  Energy e = energy(cloud.label(i));
  if (opts.budget) e = e.with_indicator(BoxConstraint(cloud.points[i], *opts.budget));
  return e;
}

// Pushforward of the cloud under per-particle flows: every particle follows
// its own trajectory of the chosen scheme; labels never move.
inline CloudFlow pushforward_flow(const ParticleCloud& cloud, const CloudEnergy& energy,
                                  const PushforwardOptions& opts, const InnerSolver& solver) {
  cloud.validate();
  CloudFlow flow;
  flow.trajectories.resize(cloud.size());
  flow.energies.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) flow.energies.push_back(particle_energy(cloud, i, energy, opts));

  parallel_for(cloud.size(), [&](std::size_t i) {
    const Energy& e = flow.energies[i];
    const std::uint64_t stream = i * kParticleStreamStride;
    try {
      switch (opts.scheme) {
        case CloudScheme::minmove:
          flow.trajectories[i] = minimizing_movement(e, cloud.points[i], opts.tau, opts.steps, solver, stream);
          break;
        case CloudScheme::semi_implicit:
          flow.trajectories[i] = semi_implicit_minmove(e, cloud.points[i], opts.tau, opts.steps, solver, stream);
          break;
        case CloudScheme::ifgsm:
          // Signed steps in l-infinity, clipped to the particle's box when one is set.
          flow.trajectories[i] =
              semi_implicit_minmove(e.with_space(PNorm::infinity()), cloud.points[i], opts.tau, opts.steps, solver, stream);
          break;
      }
    } catch (const Error& err) {
      throw ParticleError(i, err.what());
    }
  });

  flow.clouds.resize(opts.steps + 1);
  for (std::size_t k = 0; k <= opts.steps; ++k) {
    flow.clouds[k].labels = cloud.labels;
    flow.clouds[k].points.reserve(cloud.size());
    for (const Trajectory& t : flow.trajectories) flow.clouds[k].points.push_back(t.iterates[k]);
  }
  return flow;
}

inline CloudFlow pushforward_flow(const ParticleCloud& cloud, const Energy& e, const PushforwardOptions& opts,
                                  const InnerSolver& solver) {
  return pushforward_flow(cloud, [e](std::optional<int>) { return e; }, opts, solver);
}

// Loss l(x, y) of a labeled particle; the adversary maximizes it.
using LabeledLoss = std::function<double(const Point&, std::optional<int>)>;

struct DroCheck {
  double lhs = 0.0;  // (1/n) sum_i max_{|x - x_i| <= eps} l(x, y_i)
  double rhs = 0.0;  // potential of the pushforward cloud (r_eps)_# mu under l
  double gap = 0.0;
};

// Compares the mean of per-particle ball maxima with the loss potential of the
// one-step minimizing-movement pushforward of radius eps. The left side uses
// random streams independent of the pushforward's.
inline DroCheck dro_check(const ParticleCloud& cloud, const LabeledLoss& loss, double eps, const InnerSolver& solver) {
  cloud.validate();
  if (!(eps > 0.0)) throw InvalidArgument("dro_check: eps must be > 0");
  auto adversary = [&loss](std::optional<int> label) {
    return Energy([label, &loss](const Point& x) { return -loss(x, label); },
                  [](const Point& x) { return Point::zeros(x.size()); }, PNorm::infinity());
  };
  constexpr std::uint64_t kIndependent = std::uint64_t{1} << 63;
  DroCheck out;
  double total = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Energy e = adversary(cloud.label(i));
    try {
      total += -ball_minimize(e, cloud.points[i], eps, solver, kIndependent + i * kParticleStreamStride).value;
    } catch (const Error& err) {
      throw ParticleError(i, err.what());
    }
  }
  out.lhs = total / static_cast<double>(cloud.size());

  const CloudFlow flow = pushforward_flow(cloud, adversary, {CloudScheme::minmove, eps, 1, std::nullopt}, solver);
  out.rhs = -potential_energy(flow.clouds.back(), adversary);
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

// Columns: index, x_1..x_d[, label].
inline std::string cloud_csv(const ParticleCloud& cloud) {
  cloud.validate();
  std::string out = "index";
  for (std::size_t i = 1; i <= cloud.points.front().size(); ++i) out += ",x_" + std::to_string(i);
  if (cloud.labels) out += ",label";
  out += "\n";
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    out += std::to_string(k);
    for (double v : cloud.points[k]) out += "," + io::format_double(v);
    if (cloud.labels) out += "," + std::to_string((*cloud.labels)[k]);
    out += "\n";
  }
  return out;
}

inline ParticleCloud parse_cloud_csv(const std::string& text) {
  const io::Csv csv = io::parse_csv(text);
  if (csv.header.empty() || csv.header.front() != "index") throw InvalidArgument("cloud csv: first column must be 'index'");
  const bool labeled = csv.header.back() == "label";
  const std::size_t dim = csv.header.size() - 1 - (labeled ? 1 : 0);
  if (dim == 0) throw InvalidArgument("cloud csv: no coordinate columns");
  ParticleCloud cloud;
  if (labeled) cloud.labels.emplace();
  for (const auto& row : csv.records) {
    cloud.points.emplace_back(std::vector<double>(row.begin() + 1, row.begin() + 1 + static_cast<std::ptrdiff_t>(dim)));
    if (labeled) {
      const double l = row.back();
      if (l != std::round(l)) throw InvalidArgument("cloud csv: labels must be integers");
      cloud.labels->push_back(static_cast<int>(l));
    }
  }
  cloud.validate();
  return cloud;
}

}  // namespace maxslope
