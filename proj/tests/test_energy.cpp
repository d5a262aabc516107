#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "maxslope/energy.hpp"
#include "support.hpp"

using namespace maxslope;

namespace {

Energy quadratic_1d(std::optional<BoxConstraint> box = std::nullopt) {
  return quadratic_energy(PNorm::of(2)).with_indicator(std::move(box));
}

}  // namespace

TEST(EvalTest, Examples) {
  EXPECT_DOUBLE_EQ(eval(quadratic_1d(), Point{1.0}), 0.5);
  const Energy boxed = quadratic_1d(BoxConstraint(Point{0.0}, 0.2));
  EXPECT_EQ(eval(boxed, Point{1.0}), kInfinity);
  EXPECT_DOUBLE_EQ(eval(boxed, Point{0.1}), 0.005);
}

TEST(SemiLinearizeTest, Examples) {
  const Energy e = quadratic_energy(PNorm::of(2));
  EXPECT_DOUBLE_EQ(semi_linearize(e, Point{1, 0})(Point{1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(semi_linearize(quadratic_1d(), Point{1.0})(Point{0.0}), -0.5);
}

TEST(SemiLinearizeTest, AffineEnergyIsItsOwnLinearization) {
  const Energy e = linear_energy(Point{0.7, -1.3}, 0.25);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Point z{u(rng), u(rng)};
    const Point x{u(rng), u(rng)};
    EXPECT_NEAR(semi_linearize(e, z)(x), eval(e, x), 1e-12);
  }
}

TEST(SemiLinearizeTest, CarriesIndicator) {
  const Energy e = quadratic_1d(BoxConstraint(Point{0.0}, 0.2));
  EXPECT_EQ(semi_linearize(e, Point{0.1})(Point{0.5}), kInfinity);
}

TEST(SlopeTest, Examples) {
  EXPECT_DOUBLE_EQ(slope(quadratic_1d(), Point{1.0}), 1.0);
  EXPECT_DOUBLE_EQ(slope(quadratic_energy(PNorm::infinity()), Point{0, 0}), 0.0);
  // l-infinity space: the slope is the l1 norm of the gradient.
  EXPECT_DOUBLE_EQ(slope(quadratic_energy(PNorm::infinity()), Point{1, -2}), 3.0);
}

TEST(SlopeTest, ActiveUpperCornerMatchesDifferenceQuotient) {
  const Energy e = linear_energy(Point{-2, 3}).with_indicator(BoxConstraint(Point{0, 0}, 1.0));
  const Point corner{1, 1};
  const double s = slope(e, corner);
  EXPECT_DOUBLE_EQ(s, 3.0);
  const double tau = 1e-4;
  const double oracle = (eval(e, corner) - e_tau(e, corner, tau, make_grid_solver(201))) / tau;
  EXPECT_NEAR(s, oracle, 0.05 * oracle);
}

TEST(SlopeTest, ActiveLowerFaceDropsOutwardComponent) {
  const Energy e = linear_energy(Point{2, 1}).with_indicator(BoxConstraint(Point{0, 0}, 1.0));
  // Lower face in coordinate 0: descent would leave the box, only the free coordinate counts.
  EXPECT_DOUBLE_EQ(slope(e, Point{-1, 0}), 1.0);
}

TEST(SlopeTest, ActiveConstraintOutsideLInfinityIsUndefined) {
  const Energy e = linear_energy(Point{1, 1}, 0.0, PNorm::of(2)).with_indicator(BoxConstraint(Point{0, 0}, 1.0));
  EXPECT_THROW(slope(e, Point{1, 0}), UndefinedSlope);
  EXPECT_NO_THROW(slope(e, Point{0.5, 0}));
}

TEST(SlopeTest, OutsideDomainThrows) {
  const Energy e = quadratic_1d(BoxConstraint(Point{0.0}, 0.2));
  EXPECT_THROW(slope(e, Point{1.0}), InfiniteEnergy);
}

TEST(ETauTest, QuadraticExamples) {
  const InnerSolver solver = make_grid_solver(10001);
  EXPECT_NEAR(e_tau(quadratic_1d(), Point{1.0}, 0.3, solver), 0.245, 1e-9);
  EXPECT_NEAR(e_tau(quadratic_1d(), Point{1.0}, 2.0, solver), 0.0, 1e-9);
}

TEST(ETauTest, NeverExceedsCenterValue) {
  // A solver that only ever proposes bad points still cannot beat the center.
  const InnerSolver bad = [](const Objective&, const IntervalBox& box, std::uint64_t) {
    return Minimum{box.upper, 1e9};
  };
  EXPECT_DOUBLE_EQ(e_tau(quadratic_1d(), Point{1.0}, 0.3, bad), 0.5);
}

TEST(ETauTest, SolverFailureIsReported) {
  const InnerSolver failing = [](const Objective& f, const IntervalBox& box, std::uint64_t) {
    f(box.lower);
    throw SolverFailure("did not converge");
    return Minimum{};
  };
  EXPECT_THROW(e_tau(quadratic_1d(), Point{1.0}, 0.3, failing), SolverFailure);
  const Objective nan = [](const Point&) { return NAN; };
  EXPECT_THROW(ball_minimize(quadratic_1d(), nan, Point{1.0}, 0.3, make_cbo_solver({})), SolverFailure);
}

TEST(ETauTest, NetEnergyMatchesDenseGrid) {
  const auto& model = support::trained_gelu();
  const InnerSolver cbo = make_cbo_solver(support::precise_cbo(9));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int trial = 0; trial < 5; ++trial) {
    const Point x{u(rng), u(rng) * 0.5};
    const Energy e = support::net_energy(model, model.output(x) >= 0.5 ? 1.0 : 0.0);
    const double grid = grid_minimize([&](const Point& y) { return eval(e, y); }, ball_search_box(e, x, 0.1), 200).value;
    EXPECT_NEAR(e_tau(e, x, 0.1, cbo, static_cast<std::uint64_t>(trial)), grid, 1e-3);
  }
}

TEST(BallMinimizeTest, EuclideanBallIsRespected) {
  const Energy e = linear_energy(Point{1, 1}, 0.0, PNorm::of(2));
  const Minimum m = ball_minimize(e, Point{0, 0}, 1.0, make_grid_solver(401));
  EXPECT_LE(norm(m.argmin, PNorm::of(2)), 1.0);
  EXPECT_NEAR(m.value, -std::sqrt(2.0), 1e-2);
}

TEST(BallMinimizeTest, DisjointIndicatorFailsCleanly) {
  const Energy e = quadratic_1d(BoxConstraint(Point{5.0}, 0.1));
  EXPECT_THROW(ball_minimize(e, Point{0.0}, 0.5, make_grid_solver(11)), EmptyIntersection);
}
