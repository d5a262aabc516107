#pragma once

#include <cstdint>

#include "maxslope/cbo.hpp"
#include "maxslope/energy.hpp"
#include "maxslope/net.hpp"

namespace maxslope::support {

// Larger inner time step: the noise reaches the box faces within the inner
// iteration budget, which the default step does not.
inline CboConfig precise_cbo(std::uint64_t seed = 0) {
  CboConfig c;
  c.time_step = 0.1;
  c.seed = seed;
  return c;
}

// Small GeLU classifier on two moons, trained once per test binary.
inline const net::InputGradient& trained_gelu() {
  static const net::InputGradient model = [] {
    const net::Dataset data = net::two_moons(400, 0.1, 1);
    net::TrainConfig cfg;
    cfg.epochs = 60;
    cfg.seed = 3;
    return net::InputGradient(net::train(net::Mlp::block_network(net::Activation::gelu, 20, 3, 7), data, cfg).net);
  }();
  return model;
}

// E(x) = -|h(x) - y|^2 in l-infinity space.
inline Energy net_energy(const net::InputGradient& model, double label) {
  return Energy([&model, label](const Point& x) { return -model.loss(x, label); },
                [&model, label](const Point& x) { return -model.gradient(x, label); }, PNorm::infinity());
}

}  // namespace maxslope::support
