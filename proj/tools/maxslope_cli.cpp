#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "maxslope/experiment.hpp"

namespace ex = maxslope::experiment;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

ex::ExperimentConfig resolve(const Options& o) {
  ex::ExperimentConfig c = ex::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  return c;
}

void report(const std::string& command, const ex::ExperimentConfig& c) {
  std::cout << command << ": wrote results to " << c.output_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maxslope: infinity-curves of maximal slope, adversarial attacks and cloud flows"};
  app.require_subcommand(1);
  Options opts;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "JSON experiment config")->required();
    sub->add_option("--seed", opts.seed, "override the config seed");
    sub->add_option("--out", opts.out, "override the output directory");
    return sub;
  };
  CLI::App* train = add("train", "train the two-moons classifier");
  CLI::App* flow = add("flow", "IFGSM and minimizing-movement trajectories over the tau grid");
  CLI::App* attack = add("attack", "single IFGSM or FGSM attack");
  CLI::App* study = add("study", "tau-convergence study of IFGSM against minimizing movement");
  CLI::App* measure = add("measure-flow", "pushforward flow of a labeled particle cloud");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const ex::ExperimentConfig c = resolve(opts);
    if (train->parsed()) {
      const auto out = ex::cmd_train(c);
      std::cout << "final loss " << out.result.final_loss << "\n";
      report("train", c);
    } else if (flow->parsed()) {
      ex::cmd_flow(c);
      report("flow", c);
    } else if (attack->parsed()) {
      const auto out = ex::cmd_attack(c);
      std::cout << "output " << out.initial_output << " -> " << out.final_output << (out.flipped ? " (flipped)" : "")
                << "\n";
      report("attack", c);
    } else if (study->parsed()) {
      for (const auto& r : ex::cmd_study(c).records) std::cout << "tau " << r.tau << "  e_tau " << r.e_tau << "\n";
      report("study", c);
    } else if (measure->parsed()) {
      ex::cmd_measure(c);
      report("measure-flow", c);
    }
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
