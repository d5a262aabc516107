#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "maxslope/net.hpp"

using namespace maxslope;
using namespace maxslope::net;

namespace {

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Half squared error of a batch in the given mode, as a function of the parameters.
double batch_loss(Mlp net, std::span<const double> theta, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  net.set_parameters(theta);
  const Eigen::MatrixXd out = forward(net, x);
  return 0.5 * (out - y).squaredNorm() / static_cast<double>(x.cols());
}

Mlp trained_with_stats(std::uint64_t seed) {
  // A few epochs move the running statistics away from the identity.
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = seed;
  return train(Mlp::block_network(Activation::gelu, 8, 2, seed), two_moons(200, 0.1, seed), cfg).net;
}

}  // namespace

TEST(ActivationTest, Identities) {
  EXPECT_EQ(activate(Activation::gelu, 0.0), 0.0);
  EXPECT_EQ(activate(Activation::sigmoid, 0.0), 0.5);
  EXPECT_EQ(activate(Activation::relu, -1.0), 0.0);
  EXPECT_EQ(activate_derivative(Activation::relu, 0.0), 0.0);
  EXPECT_NEAR(activate(Activation::gelu, 1.0), 0.8413447460685429, 1e-15);
  EXPECT_THROW(parse_activation("tanh"), InvalidArgument);
}

TEST(ActivationTest, DerivativesMatchFiniteDifferences) {
  for (Activation a : {Activation::gelu, Activation::sigmoid, Activation::relu}) {
    for (double z : {-2.3, -0.4, 0.7, 1.9}) {
      const double fd = (activate(a, z + 1e-6) - activate(a, z - 1e-6)) / 2e-6;
      EXPECT_NEAR(activate_derivative(a, z), fd, 1e-8);
    }
  }
}

TEST(TwoMoonsTest, NoiselessPointsLieOnHalfCircles) {
  const Dataset d = two_moons(4, 0.0, 17);
  ASSERT_EQ(d.size(), 4u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Point& p = d.inputs[i];
    if (d.labels[i] == 0.0) {
      EXPECT_NEAR(p[0] * p[0] + p[1] * p[1], 1.0, 1e-14);
      EXPECT_GE(p[1], 0.0);
    } else {
      EXPECT_NEAR((1 - p[0]) * (1 - p[0]) + (0.5 - p[1]) * (0.5 - p[1]), 1.0, 1e-14);
      EXPECT_LE(p[1], 0.5);
    }
  }
  EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 1.0), 2);
}

TEST(TwoMoonsTest, BalancedAndDeterministic) {
  const Dataset a = two_moons(1000, 0.1, 5);
  EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), 0.0), 500);
  EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), 1.0), 500);
  const Dataset b = two_moons(1000, 0.1, 5);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_NE(two_moons(1000, 0.1, 6).inputs, a.inputs);
  EXPECT_THROW(two_moons(0, 0.1, 1), InvalidArgument);
}

TEST(ForwardTest, OutputsAreProbabilities) {
  const Mlp net = Mlp::block_network(Activation::relu, 10, 2, 1);
  const Dataset d = two_moons(50, 0.3, 2);
  for (double v : forward(net, d.inputs)) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(predict(net, Point{1, 2, 3}), DimensionMismatch);
}

TEST(ForwardTest, TrainModeBatchNormNormalizes) {
  Mlp net;
  net.layers.emplace_back(BatchNorm{Eigen::Vector2d(2.0, 0.5), Eigen::Vector2d(-1.0, 3.0), Eigen::Vector2d::Zero(),
                                    Eigen::Vector2d::Ones()});
  net.mode = Mode::train;
  Eigen::MatrixXd x(2, 5);
  x << 1, 2, 3, 4, 10, -1, 0, 5, 2, 2;
  const Eigen::MatrixXd out = forward(net, x);
  const Eigen::VectorXd mean = out.rowwise().mean();
  const Eigen::VectorXd var = (out.colwise() - mean).array().square().rowwise().mean();
  EXPECT_NEAR(mean(0), -1.0, 1e-12);
  EXPECT_NEAR(mean(1), 3.0, 1e-12);
  EXPECT_NEAR(var(0), 4.0, 1e-4);
  EXPECT_NEAR(var(1), 0.25, 1e-4);
}

TEST(ForwardTest, EvalModeIgnoresBatchComposition) {
  const Mlp net = trained_with_stats(3);
  const Point x{0.2, 0.4}, y{1.5, -0.3}, z{-0.7, 0.9};
  const std::vector<Point> a{x, y}, b{x, z};
  EXPECT_EQ(forward(net, a)[0], forward(net, b)[0]);
}

TEST(GradInputTest, AffineNetMatchesClosedForm) {
  Mlp net;
  Linear lin{Eigen::MatrixXd(1, 2), Eigen::VectorXd(1)};
  lin.weight << 0.3, -0.8;
  lin.bias << 0.1;
  net.layers.emplace_back(lin);
  const Point x{0.5, 0.25};
  const double h = 0.3 * 0.5 - 0.8 * 0.25 + 0.1;
  const Point g = grad_input(net, x, 1.0);
  EXPECT_NEAR(g[0], 2 * (h - 1.0) * 0.3, 1e-15);
  EXPECT_NEAR(g[1], 2 * (h - 1.0) * -0.8, 1e-15);
}

TEST(GradInputTest, MatchesFiniteDifferences) {
  const Mlp net = trained_with_stats(4);
  const InputGradient model(net);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    const Point x{u(rng), u(rng) * 0.5};
    const double target = trial % 2;
    const Point g = model.gradient(x, target);
    EXPECT_EQ(g, grad_input(net, x, target));
    for (std::size_t i = 0; i < 2; ++i) {
      std::vector<double> vp = x.vector(), vm = x.vector();
      vp[i] += h;
      vm[i] -= h;
      const double fd = (model.loss(Point(vp), target) - model.loss(Point(vm), target)) / (2 * h);
      EXPECT_LE(relative_error(g[i], fd), 1e-4) << "x=(" << x[0] << "," << x[1] << ") i=" << i;
    }
  }
}

TEST(GradInputTest, VanishesAtLossMaximum) {
  // h(x) = sigmoid(gelu(x - 0.3)): |h - 1|^2 peaks at the GeLU minimum.
  Mlp net;
  Linear l1{Eigen::MatrixXd(1, 1), Eigen::VectorXd(1)};
  l1.weight << 1.0;
  l1.bias << -0.3;
  Linear l2{Eigen::MatrixXd(1, 1), Eigen::VectorXd(1)};
  l2.weight << 1.0;
  l2.bias << 0.0;
  net.layers.emplace_back(l1);
  net.layers.emplace_back(Act{Activation::gelu});
  net.layers.emplace_back(l2);
  net.layers.emplace_back(Act{Activation::sigmoid});
  const InputGradient model(net);
  double best_x = 0.0, best = -1.0;
  for (int k = 0; k <= 230000; ++k) {
    const double x = -2.0 + 1e-5 * k;
    const double v = model.loss(Point{x}, 1.0);
    if (v > best) best = v, best_x = x;
  }
  EXPECT_LE(std::abs(model.gradient(Point{best_x}, 1.0)[0]), 1e-6);
}

TEST(BackwardTest, ParameterGradientsMatchFiniteDifferences) {
  for (Mode mode : {Mode::eval, Mode::train}) {
    Mlp net = trained_with_stats(5);
    net.mode = mode;
    const Dataset d = two_moons(16, 0.1, 9);
    const Eigen::MatrixXd x = to_matrix(d.inputs);
    Eigen::MatrixXd y(1, 16);
    for (int j = 0; j < 16; ++j) y(0, j) = d.labels[static_cast<std::size_t>(j)];
    Tape tape;
    const Eigen::MatrixXd out = forward(net, x, &tape);
    const Gradients g = backward(net, tape, (out - y) / 16.0);
    std::vector<double> theta = net.parameters();
    ASSERT_EQ(g.parameters.size(), theta.size());
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t k = pick(rng);
      const double h = 1e-5;
      std::vector<double> tp = theta, tm = theta;
      tp[k] += h;
      tm[k] -= h;
      const double fd = (batch_loss(net, tp, x, y) - batch_loss(net, tm, x, y)) / (2 * h);
      EXPECT_NEAR(g.parameters[k], fd, 1e-4 * std::max(1e-3, std::abs(fd))) << "parameter " << k;
    }
  }
}

TEST(TrainTest, SeparableToyData) {
  Dataset d;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Point p{u(rng), u(rng)};
    d.inputs.push_back(p);
    d.labels.push_back(p[0] + 0.5 * p[1] > 0.0 ? 1.0 : 0.0);
  }
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 50;
  cfg.learning_rate = 1e-2;
  const TrainResult r = train(Mlp::block_network(Activation::gelu, 10, 1, 1), d, cfg);
  EXPECT_LT(r.final_loss, 0.01);
  EXPECT_EQ(r.loss_history.size(), 300u);
}

TEST(TrainTest, ZeroEpochsLeavesNetUnchanged) {
  const Mlp net = Mlp::block_network(Activation::gelu, 6, 2, 4);
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainResult r = train(net, two_moons(20, 0.1, 1), cfg);
  EXPECT_EQ(r.net.parameters(), net.parameters());
  EXPECT_TRUE(r.loss_history.empty());
}

TEST(TrainTest, DivergenceIsReported) {
  Mlp net = Mlp::block_network(Activation::relu, 4, 1, 1);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learning_rate = NAN;
  EXPECT_THROW(train(net, two_moons(20, 0.1, 1), cfg), Divergence);
}

TEST(SerializationTest, RoundTripIsExact) {
  const Mlp net = trained_with_stats(6);
  const Mlp back = mlp_from_json(nlohmann::json::parse(to_json(net).dump()));
  EXPECT_EQ(back.parameters(), net.parameters());
  const Point x{0.3, 0.1};
  EXPECT_EQ(predict(back, x), predict(net, x));
  const auto path = std::filesystem::temp_directory_path() / "maxslope_test_model.json";
  save_model(net, path.string());
  EXPECT_EQ(predict(load_model(path.string()), x), predict(net, x));
  std::filesystem::remove(path);
}

TEST(SerializationTest, RejectsForeignDocuments) {
  EXPECT_THROW(mlp_from_json(nlohmann::json{{"format", "other"}, {"version", 1}}), InvalidArgument);
  EXPECT_THROW(mlp_from_json(nlohmann::json{{"format", "maxslope-mlp"}, {"version", 2}}), InvalidArgument);
  EXPECT_THROW(load_model("/nonexistent/model.json"), IoError);
}

TEST(SerializationTest, DatasetCsvRoundTrip) {
  const Dataset d = two_moons(10, 0.1, 3);
  const Dataset back = parse_dataset_csv(dataset_csv(d));
  EXPECT_EQ(back.inputs, d.inputs);
  EXPECT_EQ(back.labels, d.labels);
}
