#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "maxslope/error.hpp"
#include "maxslope/geometry.hpp"
#include "maxslope/io.hpp"

namespace maxslope::net {

enum class Activation { relu, gelu, sigmoid };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::gelu: return "gelu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "relu" || name == "ReLU") return Activation::relu;
  if (name == "gelu" || name == "GeLU") return Activation::gelu;
  if (name == "sigmoid" || name == "Sigmoid") return Activation::sigmoid;
  throw InvalidArgument("unknown activation '" + name + "'");
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::gelu: return z * normal_cdf(z);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// ReLU'(0) is taken as 0.
inline double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::gelu: return normal_cdf(z) + z * normal_pdf(z);
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

struct Linear {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

struct Act {
  Activation kind;
};

struct BatchNorm {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
  double epsilon = 1e-5;
  double momentum = 0.1;

  static BatchNorm identity(std::size_t dim) {
    return {Eigen::VectorXd::Ones(dim), Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim),
            Eigen::VectorXd::Ones(dim)};
  }
};

using Layer = std::variant<Linear, Act, BatchNorm>;

enum class Mode { train, eval };

class Mlp {
 public:
  std::vector<Layer> layers;
  Mode mode = Mode::eval;

  // `blocks` x (Linear -> activation -> BatchNorm), then Linear(width -> 1) -> Sigmoid.
  // Weights and biases are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static Mlp block_network(Activation act, std::size_t width = 20, std::size_t blocks = 3,
                           std::uint64_t seed = 0, std::size_t input_dim = 2) {
    std::mt19937_64 rng(seed);
    auto linear = [&rng](std::size_t in, std::size_t out) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> u(-bound, bound);
      Linear l{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = u(rng);
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = u(rng);
      return l;
    };
    Mlp net;
    std::size_t in = input_dim;
    for (std::size_t b = 0; b < blocks; ++b) {
      net.layers.emplace_back(linear(in, width));
      net.layers.emplace_back(Act{act});
      net.layers.emplace_back(BatchNorm::identity(width));
      in = width;
    }
    net.layers.emplace_back(linear(in, 1));
    net.layers.emplace_back(Act{Activation::sigmoid});
    return net;
  }

  std::size_t input_dim() const {
    for (const Layer& l : layers) {
      if (const auto* lin = std::get_if<Linear>(&l)) return static_cast<std::size_t>(lin->weight.cols());
      if (const auto* bn = std::get_if<BatchNorm>(&l)) return static_cast<std::size_t>(bn->gamma.size());
    }
    return 0;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) {
      if (const auto* lin = std::get_if<Linear>(&l)) n += lin->weight.size() + lin->bias.size();
      if (const auto* bn = std::get_if<BatchNorm>(&l)) n += bn->gamma.size() + bn->beta.size();
    }
    return n;
  }

  // Flattened trainable parameters: per layer, row-major weight then bias, or
  // gamma then beta.
  std::vector<double> parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const Layer& l : layers) {
      if (const auto* lin = std::get_if<Linear>(&l)) {
        for (Eigen::Index r = 0; r < lin->weight.rows(); ++r)
          for (Eigen::Index c = 0; c < lin->weight.cols(); ++c) out.push_back(lin->weight(r, c));
        for (Eigen::Index r = 0; r < lin->bias.size(); ++r) out.push_back(lin->bias(r));
      } else if (const auto* bn = std::get_if<BatchNorm>(&l)) {
        for (Eigen::Index r = 0; r < bn->gamma.size(); ++r) out.push_back(bn->gamma(r));
        for (Eigen::Index r = 0; r < bn->beta.size(); ++r) out.push_back(bn->beta(r));
      }
    }
    return out;
  }

  void set_parameters(std::span<const double> theta) {
    if (theta.size() != parameter_count()) throw DimensionMismatch("set_parameters: wrong parameter count");
    std::size_t k = 0;
    for (Layer& l : layers) {
      if (auto* lin = std::get_if<Linear>(&l)) {
        for (Eigen::Index r = 0; r < lin->weight.rows(); ++r)
          for (Eigen::Index c = 0; c < lin->weight.cols(); ++c) lin->weight(r, c) = theta[k++];
        for (Eigen::Index r = 0; r < lin->bias.size(); ++r) lin->bias(r) = theta[k++];
      } else if (auto* bn = std::get_if<BatchNorm>(&l)) {
        for (Eigen::Index r = 0; r < bn->gamma.size(); ++r) bn->gamma(r) = theta[k++];
        for (Eigen::Index r = 0; r < bn->beta.size(); ++r) bn->beta(r) = theta[k++];
      }
    }
  }
};

// Intermediate values recorded by a forward pass for reverse accumulation.
struct Tape {
  Mode mode = Mode::eval;
  std::vector<Eigen::MatrixXd> inputs;  // input of every layer
  std::vector<Eigen::MatrixXd> normalized;
  std::vector<Eigen::VectorXd> inv_std;
  std::vector<Eigen::VectorXd> batch_mean;
  std::vector<Eigen::VectorXd> batch_var;  // biased
};

// Columns of `x` are samples. Train mode normalizes with batch statistics,
// eval mode with the running estimates.
inline Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& x, Tape* tape = nullptr) {
  if (static_cast<std::size_t>(x.rows()) != net.input_dim()) {
    throw DimensionMismatch("forward: expected input dimension " + std::to_string(net.input_dim()) + ", got " +
                            std::to_string(x.rows()));
  }
  const std::size_t n = net.layers.size();
  if (tape) {
    *tape = Tape{};
    tape->mode = net.mode;
    tape->inputs.reserve(n);
    tape->normalized.resize(n);
    tape->inv_std.resize(n);
    tape->batch_mean.resize(n);
    tape->batch_var.resize(n);
  }
  Eigen::MatrixXd h = x;
  for (std::size_t i = 0; i < n; ++i) {
    if (tape) tape->inputs.push_back(h);
    const Layer& layer = net.layers[i];
    if (const auto* lin = std::get_if<Linear>(&layer)) {
      if (lin->weight.cols() != h.rows()) throw DimensionMismatch("forward: incompatible linear layer");
      h = (lin->weight * h).colwise() + lin->bias;
    } else if (const auto* act = std::get_if<Act>(&layer)) {
      h = h.unaryExpr([kind = act->kind](double z) { return activate(kind, z); });
    } else {
      const auto& bn = std::get<BatchNorm>(layer);
      if (bn.gamma.size() != h.rows()) throw DimensionMismatch("forward: incompatible batch norm layer");
      Eigen::VectorXd mean, var;
      if (net.mode == Mode::train) {
        mean = h.rowwise().mean();
        var = (h.colwise() - mean).array().square().rowwise().mean();
      } else {
        mean = bn.running_mean;
        var = bn.running_var;
      }
      const Eigen::VectorXd inv_std = (var.array() + bn.epsilon).rsqrt();
      Eigen::MatrixXd xhat = (h.colwise() - mean).array().colwise() * inv_std.array();
      h = (xhat.array().colwise() * bn.gamma.array()).colwise() + bn.beta.array();
      if (tape) {
        tape->normalized[i] = std::move(xhat);
        tape->inv_std[i] = inv_std;
        tape->batch_mean[i] = mean;
        tape->batch_var[i] = var;
      }
    }
  }
  return h;
}

struct Gradients {
  std::vector<double> parameters;  // same order as Mlp::parameters()
  Eigen::MatrixXd input;
};

// Reverse pass: `output_grad` is dL/d(output) for every sample column.
inline Gradients backward(const Mlp& net, const Tape& tape, const Eigen::MatrixXd& output_grad) {
  const std::size_t n = net.layers.size();
  std::vector<std::vector<double>> per_layer(n);
  Eigen::MatrixXd g = output_grad;
  for (std::size_t idx = n; idx-- > 0;) {
    const Layer& layer = net.layers[idx];
    const Eigen::MatrixXd& in = tape.inputs[idx];
    if (const auto* lin = std::get_if<Linear>(&layer)) {
      const Eigen::MatrixXd dw = g * in.transpose();
      const Eigen::VectorXd db = g.rowwise().sum();
      auto& out = per_layer[idx];
      out.reserve(dw.size() + db.size());
      for (Eigen::Index r = 0; r < dw.rows(); ++r)
        for (Eigen::Index c = 0; c < dw.cols(); ++c) out.push_back(dw(r, c));
      for (Eigen::Index r = 0; r < db.size(); ++r) out.push_back(db(r));
      g = lin->weight.transpose() * g;
    } else if (const auto* act = std::get_if<Act>(&layer)) {
      g = g.cwiseProduct(in.unaryExpr([kind = act->kind](double z) { return activate_derivative(kind, z); }));
    } else {
      const auto& bn = std::get<BatchNorm>(layer);
      const Eigen::MatrixXd& xhat = tape.normalized[idx];
      const Eigen::VectorXd dgamma = g.cwiseProduct(xhat).rowwise().sum();
      const Eigen::VectorXd dbeta = g.rowwise().sum();
      auto& out = per_layer[idx];
      out.assign(dgamma.data(), dgamma.data() + dgamma.size());
      out.insert(out.end(), dbeta.data(), dbeta.data() + dbeta.size());
      const Eigen::MatrixXd dxhat = g.array().colwise() * bn.gamma.array();
      if (tape.mode == Mode::eval) {
        g = dxhat.array().colwise() * tape.inv_std[idx].array();
      } else {
        const double b = static_cast<double>(g.cols());
        const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
        const Eigen::VectorXd sum_dxhat_xhat = dxhat.cwiseProduct(xhat).rowwise().sum();
        Eigen::MatrixXd centered = (b * dxhat).colwise() - sum_dxhat;
        centered -= (xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
        g = (centered.array().colwise() * (tape.inv_std[idx].array() / b)).matrix();
      }
    }
  }
  Gradients result;
  result.parameters.reserve(net.parameter_count());
  for (auto& part : per_layer) result.parameters.insert(result.parameters.end(), part.begin(), part.end());
  result.input = std::move(g);
  return result;
}

inline Eigen::MatrixXd to_matrix(std::span<const Point> batch) {
  if (batch.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(batch.front().size()), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    require_same_dim(batch[j], batch.front());
    for (std::size_t i = 0; i < batch[j].size(); ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = batch[j][i];
  }
  return x;
}

// Scalar outputs h(x) for a batch of inputs.
inline std::vector<double> forward(const Mlp& net, std::span<const Point> batch) {
  const Eigen::MatrixXd out = forward(net, to_matrix(batch));
  return std::vector<double>(out.data(), out.data() + out.size());
}

inline double predict(const Mlp& net, const Point& x) { return forward(net, std::span<const Point>(&x, 1)).front(); }

// Gradient of x -> |h(x) - target|^2 with respect to the input. Runs in eval
// mode regardless of net.mode.
inline Point grad_input(const Mlp& net, const Point& x, double target) {
  Mlp frozen = net;
  frozen.mode = Mode::eval;
  Tape tape;
  const Eigen::MatrixXd out = forward(frozen, to_matrix(std::span<const Point>(&x, 1)), &tape);
  Eigen::MatrixXd seed(1, 1);
  seed(0, 0) = 2.0 * (out(0, 0) - target);
  const Gradients g = backward(frozen, tape, seed);
  return Point(std::vector<double>(g.input.data(), g.input.data() + g.input.size()));
}

// Callable evaluating h and d/dx |h(x) - target|^2 on a fixed eval-mode copy.
class InputGradient {
 public:
  explicit InputGradient(Mlp net) : net_(std::move(net)) { net_.mode = Mode::eval; }

  double output(const Point& x) const { return predict(net_, x); }
  double loss(const Point& x, double target) const {
    const double r = output(x) - target;
    return r * r;
  }
  Point gradient(const Point& x, double target) const {
    Tape tape;
    const Eigen::MatrixXd out = forward(net_, to_matrix(std::span<const Point>(&x, 1)), &tape);
    Eigen::MatrixXd seed(1, 1);
    seed(0, 0) = 2.0 * (out(0, 0) - target);
    const Gradients g = backward(net_, tape, seed);
    return Point(std::vector<double>(g.input.data(), g.input.data() + g.input.size()));
  }
  const Mlp& net() const { return net_; }

 private:
  Mlp net_;
};

struct Dataset {
  std::vector<Point> inputs;
  std::vector<double> labels;

  std::size_t size() const { return inputs.size(); }
};

// Two interleaved half circles: sample i lies on the upper moon (cos t, sin t)
// with label 0 when i is even, on the lower moon (1 - cos t, 0.5 - sin t) with
// label 1 when i is odd; t ~ U[0, pi], plus N(0, noise^2) per coordinate.
inline Dataset two_moons(std::size_t count, double noise, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("two_moons: count must be >= 1");
  if (!(noise >= 0.0)) throw InvalidArgument("two_moons: noise must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.inputs.reserve(count);
  d.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = angle(rng);
    const bool lower = i % 2 == 1;
    double x1 = lower ? 1.0 - std::cos(t) : std::cos(t);
    double x2 = lower ? 0.5 - std::sin(t) : std::sin(t);
    if (noise > 0.0) {
      x1 += noise * gauss(rng);
      x2 += noise * gauss(rng);
    }
    d.inputs.push_back(Point{x1, x2});
    d.labels.push_back(lower ? 1.0 : 0.0);
  }
  return d;
}

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Mlp net;
  std::vector<double> loss_history;  // mean batch loss per epoch
  double final_loss = 0.0;           // full-dataset loss in eval mode
};

// 1/(2K) sum_k |h(x_k) - y_k|^2 in eval mode.
inline double data_loss(const Mlp& net, const Dataset& data) {
  Mlp frozen = net;
  frozen.mode = Mode::eval;
  const std::vector<double> out = forward(frozen, std::span<const Point>(data.inputs));
  double s = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) s += (out[k] - data.labels[k]) * (out[k] - data.labels[k]);
  return 0.5 * s / static_cast<double>(out.size());
}

inline double mean_squared_error(const Mlp& net, const Dataset& data) { return 2.0 * data_loss(net, data); }

// Minibatch Adam on the half mean squared error. Each epoch visits a fresh
// random partition of the data into disjoint batches.
inline TrainResult train(Mlp net, const Dataset& data, const TrainConfig& cfg) {
  if (data.size() == 0 || data.labels.size() != data.inputs.size()) {
    throw InvalidArgument("train: dataset must be nonempty with one label per input");
  }
  if (cfg.batch_size == 0) throw InvalidArgument("train: batch_size must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  std::vector<double> theta = net.parameters();
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t t = 0;

  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const auto b = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd x(static_cast<Eigen::Index>(net.input_dim()), b);
      Eigen::MatrixXd y(1, b);
      for (std::size_t j = start; j < stop; ++j) {
        const Point& p = data.inputs[order[j]];
        for (std::size_t i = 0; i < p.size(); ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - start)) = p[i];
        y(0, static_cast<Eigen::Index>(j - start)) = data.labels[order[j]];
      }
      net.mode = Mode::train;
      Tape tape;
      const Eigen::MatrixXd out = forward(net, x, &tape);
      const Eigen::MatrixXd residual = out - y;
      const double loss = 0.5 * residual.squaredNorm() / static_cast<double>(b);
      if (!std::isfinite(loss)) throw Divergence("train: loss became non-finite in epoch " + std::to_string(epoch));
      epoch_loss += loss;
      ++batches;

      const Gradients grads = backward(net, tape, residual / static_cast<double>(b));
      ++t;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
      for (std::size_t k = 0; k < theta.size(); ++k) {
        const double gk = grads.parameters[k];
        m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
        v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
        theta[k] -= cfg.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.adam_epsilon);
      }
      net.set_parameters(theta);

      // Running statistics use the unbiased batch variance.
      for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (auto* bn = std::get_if<BatchNorm>(&net.layers[i])) {
          const double unbias = b > 1 ? static_cast<double>(b) / static_cast<double>(b - 1) : 1.0;
          bn->running_mean = (1.0 - bn->momentum) * bn->running_mean + bn->momentum * tape.batch_mean[i];
          bn->running_var = (1.0 - bn->momentum) * bn->running_var + bn->momentum * unbias * tape.batch_var[i];
        }
      }
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(batches));
  }
  net.mode = Mode::eval;
  result.final_loss = data_loss(net, data);
  if (!std::isfinite(result.final_loss)) throw Divergence("train: final loss is non-finite");
  result.net = std::move(net);
  return result;
}

// ---- serialization -------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const Mlp& net) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& l : net.layers) {
    if (const auto* lin = std::get_if<Linear>(&l)) {
      std::vector<double> w;
      for (Eigen::Index r = 0; r < lin->weight.rows(); ++r)
        for (Eigen::Index c = 0; c < lin->weight.cols(); ++c) w.push_back(lin->weight(r, c));
      layers.push_back({{"type", "linear"},
                        {"in", lin->weight.cols()},
                        {"out", lin->weight.rows()},
                        {"weight", w},
                        {"bias", vec(lin->bias)}});
    } else if (const auto* act = std::get_if<Act>(&l)) {
      layers.push_back({{"type", "activation"}, {"kind", to_string(act->kind)}});
    } else {
      const auto& bn = std::get<BatchNorm>(l);
      layers.push_back({{"type", "batchnorm"},
                        {"dim", bn.gamma.size()},
                        {"gamma", vec(bn.gamma)},
                        {"beta", vec(bn.beta)},
                        {"running_mean", vec(bn.running_mean)},
                        {"running_var", vec(bn.running_var)},
                        {"epsilon", bn.epsilon},
                        {"momentum", bn.momentum}});
    }
  }
  return {{"format", "maxslope-mlp"}, {"version", kModelFormatVersion}, {"layers", layers}};
}

inline Mlp mlp_from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "maxslope-mlp") throw InvalidArgument("model: unrecognized format tag");
  if (doc.value("version", 0) != kModelFormatVersion) throw InvalidArgument("model: unsupported version");
  auto vec = [](const nlohmann::json& j, std::size_t n) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != n) throw InvalidArgument("model: array length mismatch");
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  Mlp net;
  for (const auto& l : doc.at("layers")) {
    const std::string type = l.at("type").get<std::string>();
    if (type == "linear") {
      const auto in = l.at("in").get<std::size_t>();
      const auto out = l.at("out").get<std::size_t>();
      const auto w = l.at("weight").get<std::vector<double>>();
      if (w.size() != in * out) throw InvalidArgument("model: weight size mismatch");
      Linear lin{Eigen::MatrixXd(out, in), vec(l.at("bias"), out)};
      for (std::size_t r = 0; r < out; ++r)
        for (std::size_t c = 0; c < in; ++c) lin.weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r * in + c];
      net.layers.emplace_back(std::move(lin));
    } else if (type == "activation") {
      net.layers.emplace_back(Act{parse_activation(l.at("kind").get<std::string>())});
    } else if (type == "batchnorm") {
      const auto dim = l.at("dim").get<std::size_t>();
      BatchNorm bn{vec(l.at("gamma"), dim), vec(l.at("beta"), dim), vec(l.at("running_mean"), dim),
                   vec(l.at("running_var"), dim), l.value("epsilon", 1e-5), l.value("momentum", 0.1)};
      net.layers.emplace_back(std::move(bn));
    } else {
      throw InvalidArgument("model: unknown layer type '" + type + "'");
    }
  }
  net.mode = Mode::eval;
  return net;
}

inline void save_model(const Mlp& net, const std::string& path) { io::write_text(path, to_json(net).dump(2) + "\n"); }

inline Mlp load_model(const std::string& path) {
  try {
    return mlp_from_json(nlohmann::json::parse(io::read_text(path)));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("model '" + path + "': " + e.what());
  }
}

inline std::string dataset_csv(const Dataset& d) {
  std::string out = "x1,x2,label\n";
  for (std::size_t k = 0; k < d.size(); ++k) {
    out += io::format_double(d.inputs[k][0]) + "," + io::format_double(d.inputs[k][1]) + "," +
           io::format_double(d.labels[k]) + "\n";
  }
  return out;
}

inline Dataset parse_dataset_csv(const std::string& text) {
  const auto rows = io::parse_csv(text);
  Dataset d;
  for (const auto& row : rows.records) {
    if (row.size() != 3) throw InvalidArgument("dataset csv: expected 3 columns");
    d.inputs.push_back(Point{row[0], row[1]});
    d.labels.push_back(row[2]);
  }
  return d;
}

}  // namespace maxslope::net
