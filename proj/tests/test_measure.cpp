#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "maxslope/measure.hpp"
#include "support.hpp"

using namespace maxslope;

namespace {

ParticleCloud random_cloud(std::mt19937_64& rng, std::size_t n, std::size_t dim, bool labeled) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> lab(0, 1);
  ParticleCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = u(rng);
    c.points.emplace_back(std::move(v));
  }
  if (labeled) {
    c.labels.emplace();
    for (std::size_t i = 0; i < n; ++i) c.labels->push_back(lab(rng));
  }
  return c;
}

// Minimum over all n! permutations of the maximal extended cost.
double brute_force_bottleneck(const ParticleCloud& a, const ParticleCloud& b, PNorm p) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = INFINITY;
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      const bool same = !a.labels || (*a.labels)[i] == (*b.labels)[perm[i]];
      worst = std::max(worst, same ? norm(a.points[i] - b.points[perm[i]], p) : INFINITY);
    }
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Energy quadratic_1d() { return quadratic_energy(PNorm::infinity()); }

}  // namespace

TEST(WInftyTest, IdenticalAndSingleton) {
  std::mt19937_64 rng(1);
  const ParticleCloud c = random_cloud(rng, 5, 2, true);
  const BottleneckPlan plan = w_infty(c, c);
  EXPECT_EQ(plan.value, 0.0);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(plan.target_of[i], i);
  const ParticleCloud x{{Point{0.0, 1.0}}, std::nullopt};
  const ParticleCloud z{{Point{3.0, -3.0}}, std::nullopt};
  EXPECT_DOUBLE_EQ(w_infty(x, z, PNorm::of(2)).value, 5.0);
  EXPECT_DOUBLE_EQ(w_infty(x, z).value, 4.0);
}

TEST(WInftyTest, MatchesPermutationOracle) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> size(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = size(rng);
    const bool labeled = trial % 2 == 1;
    ParticleCloud a = random_cloud(rng, n, 2, labeled);
    ParticleCloud b = random_cloud(rng, n, 2, false);
    if (labeled) {
      // Same label multiset, shuffled.
      b.labels = a.labels;
      std::shuffle(b.labels->begin(), b.labels->end(), rng);
    }
    const PNorm p = trial % 3 == 0 ? PNorm::of(2) : PNorm::infinity();
    const BottleneckPlan plan = w_infty(a, b, p);
    EXPECT_EQ(plan.value, brute_force_bottleneck(a, b, p));
  }
}

TEST(WInftyTest, LabelHistogramMismatchIsInfeasible) {
  const ParticleCloud a{{Point{0.0}, Point{1.0}}, std::vector<int>{0, 1}};
  const ParticleCloud b{{Point{0.0}, Point{1.0}}, std::vector<int>{0, 0}};
  EXPECT_THROW(w_infty(a, b), InfeasibleMatching);
  const ParticleCloud unlabeled{{Point{0.0}, Point{1.0}}, std::nullopt};
  EXPECT_THROW(w_infty(a, unlabeled), InvalidArgument);
  const ParticleCloud smaller{{Point{0.0}}, std::nullopt};
  EXPECT_THROW(w_infty(unlabeled, smaller), InvalidArgument);
}

TEST(PotentialTest, Examples) {
  const ParticleCloud single{{Point{0.4}}, std::nullopt};
  EXPECT_DOUBLE_EQ(potential_energy(single, quadratic_1d()), eval(quadratic_1d(), Point{0.4}));
  const ParticleCloud pair{{Point{1.0}, Point{-1.0}}, std::nullopt};
  EXPECT_DOUBLE_EQ(potential_energy(pair, quadratic_1d()), 0.5);
  EXPECT_DOUBLE_EQ(cloud_slope(pair, quadratic_1d()), 1.0);
  const Energy boxed = quadratic_1d().with_indicator(BoxConstraint(Point{0.0}, 0.5));
  EXPECT_THROW(potential_energy(pair, boxed), InfiniteEnergy);
}

TEST(PushforwardTest, SingletonIsTrajectory) {
  const Point x0{0.7, -0.2};
  const ParticleCloud single{{x0}, std::nullopt};
  const Energy e = quadratic_energy(PNorm::infinity(), Point{0.1, 0.3});
  const InnerSolver solver = make_cbo_solver({});
  for (CloudScheme s : {CloudScheme::minmove, CloudScheme::semi_implicit}) {
    const CloudFlow flow = pushforward_flow(single, e, {s, 0.1, 5, std::nullopt}, solver);
    const Trajectory t = s == CloudScheme::minmove ? minimizing_movement(e, x0, 0.1, 5, solver)
                                                   : semi_implicit_minmove(e, x0, 0.1, 5, solver);
    for (std::size_t k = 0; k <= 5; ++k) EXPECT_EQ(flow.clouds[k].points[0], t.iterates[k]);
  }
}

TEST(PushforwardTest, QuadraticParticlesDescendAtUnitSpeed) {
  const ParticleCloud c{{Point{1.0}, Point{0.35}, Point{0.62}}, std::nullopt};
  const CloudFlow flow =
      pushforward_flow(c, quadratic_1d(), {CloudScheme::minmove, 0.1, 12, std::nullopt},
                       make_cbo_solver(support::precise_cbo()));
  for (std::size_t k = 0; k <= 12; ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(flow.clouds[k].points[i][0], std::max(c.points[i][0] - 0.1 * static_cast<double>(k), 0.0), 1e-3);
    }
  }
}

TEST(PushforwardTest, GridStepMatchesJointExhaustiveMinimum) {
  // Two-valued energy on the 5x5 lattice {0, 0.25, ..., 1}^2.
  std::vector<Point> lattice;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) lattice.push_back(Point{0.25 * i, 0.25 * j});
  const Energy e([](const Point& x) { return std::fmod(std::round(4 * x[0]) + 2 * std::round(4 * x[1]), 3.0) == 0.0 ? 0.0 : 1.0; },
                 [](const Point& x) { return Point::zeros(x.size()); });
  const ParticleCloud c{{Point{0.25, 0.25}, Point{0.5, 1.0}, Point{1.0, 0.0}}, std::nullopt};
  const double tau = 0.25;
  const CloudFlow flow = pushforward_flow(c, e, {CloudScheme::minmove, tau, 1, std::nullopt}, make_candidate_solver(lattice));

  auto reachable = [&](const Point& x) {
    std::vector<Point> out;
    for (const Point& y : lattice)
      if (norm(y - x, PNorm::infinity()) <= tau + 1e-12) out.push_back(y);
    return out;
  };
  double joint = INFINITY;
  for (const Point& a : reachable(c.points[0]))
    for (const Point& b : reachable(c.points[1]))
      for (const Point& d : reachable(c.points[2]))
        joint = std::min(joint, (eval(e, a) + eval(e, b) + eval(e, d)) / 3.0);
  EXPECT_EQ(potential_energy(flow.clouds[1], e), joint);
}

TEST(PushforwardTest, SpeedBoundAndLabelConservation) {
  const auto& model = support::trained_gelu();
  const net::Dataset d = net::two_moons(12, 0.1, 4);
  ParticleCloud c{d.inputs, std::vector<int>{}};
  for (double l : d.labels) c.labels->push_back(static_cast<int>(l));
  const CloudEnergy energy = [&](std::optional<int> y) { return support::net_energy(model, *y); };
  for (CloudScheme s : {CloudScheme::minmove, CloudScheme::semi_implicit, CloudScheme::ifgsm}) {
    for (std::optional<double> budget : {std::optional<double>{}, std::optional<double>{0.1}}) {
      const CloudFlow flow = pushforward_flow(c, energy, {s, 0.05, 5, budget}, make_cbo_solver({}));
      for (std::size_t k = 0; k < flow.clouds.size(); ++k) {
        EXPECT_LE(w_infty(flow.clouds[k], c).value, 0.05 * static_cast<double>(k) + 1e-9);
        std::vector<int> a = *flow.clouds[k].labels, b = *c.labels;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        EXPECT_EQ(a, b);
      }
    }
  }
}

TEST(PushforwardTest, ErrorsCarryParticleIndex) {
  const ParticleCloud c{{Point{0.0}, Point{1.0}, Point{2.0}}, std::nullopt};
  const Energy e([](const Point& x) { return x[0] > 1.5 ? NAN : x[0]; },
                 [](const Point& x) { return Point::zeros(x.size()); });
  try {
    pushforward_flow(c, e, {CloudScheme::minmove, 0.1, 1, std::nullopt}, make_cbo_solver({}));
    FAIL() << "expected a particle error";
  } catch (const ParticleError& err) {
    EXPECT_EQ(err.index(), 2u);
  }
}

TEST(DroTest, ConstantLossHasNoGap) {
  std::mt19937_64 rng(3);
  const ParticleCloud c = random_cloud(rng, 6, 2, true);
  const DroCheck r = dro_check(c, [](const Point&, std::optional<int>) { return 1.5; }, 0.1, make_cbo_solver({}));
  EXPECT_EQ(r.lhs, 1.5);
  EXPECT_EQ(r.rhs, 1.5);
  EXPECT_EQ(r.gap, 0.0);
}

TEST(DroTest, ConcaveLossMatchesClosedForm) {
  // l(x, y) = -(x - y)^2 with y in {0, 1}: the ball maximum is attained at the projection of y.
  const ParticleCloud c{{Point{0.3}, Point{-0.4}, Point{1.2}, Point{0.95}}, std::vector<int>{0, 1, 1, 0}};
  const LabeledLoss loss = [](const Point& x, std::optional<int> y) { return -(x[0] - *y) * (x[0] - *y); };
  const double eps = 0.1;
  double exact = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double y = (*c.labels)[i];
    const double best = std::clamp(y, c.points[i][0] - eps, c.points[i][0] + eps);
    exact += loss(Point{best}, (*c.labels)[i]) / 4.0;
  }
  const double tol = 1e-3;
  const DroCheck r = dro_check(c, loss, eps, make_cbo_solver(support::precise_cbo()));
  EXPECT_NEAR(r.lhs, exact, tol);
  EXPECT_NEAR(r.rhs, exact, tol);
  EXPECT_LE(r.gap, 2 * tol);
}

TEST(CloudCsvTest, RoundTrip) {
  std::mt19937_64 rng(7);
  for (bool labeled : {false, true}) {
    const ParticleCloud c = random_cloud(rng, 4, 3, labeled);
    const ParticleCloud back = parse_cloud_csv(cloud_csv(c));
    EXPECT_EQ(back.points, c.points);
    EXPECT_EQ(back.labels, c.labels);
  }
  EXPECT_THROW(parse_cloud_csv("a,b\n1,2\n"), InvalidArgument);
  EXPECT_THROW(parse_cloud_csv("index,x_1,label\n0,1,0.5\n"), InvalidArgument);
  EXPECT_THROW(parse_cloud_csv("index,x_1\n"), InvalidArgument);
}
