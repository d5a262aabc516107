#pragma once

// Experiment driver behind the command line tool: configuration schema and
// the train / flow / attack / study / measure-flow commands. Every command
// writes tidy CSV and JSON into the output directory.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxslope/cbo.hpp"
#include "maxslope/energy.hpp"
#include "maxslope/error.hpp"
#include "maxslope/geometry.hpp"
#include "maxslope/io.hpp"
#include "maxslope/measure.hpp"
#include "maxslope/net.hpp"
#include "maxslope/parallel.hpp"
#include "maxslope/schemes.hpp"

namespace maxslope::experiment {

inline constexpr int kConfigVersion = 1;

// Malformed or inconsistent configuration (exit code 1).
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct NetSection {
  net::Activation activation = net::Activation::gelu;
  std::size_t width = 20;
  std::size_t blocks = 3;
  std::size_t samples = 1000;
  double noise = 0.1;
  net::TrainConfig train;
  std::string model = "model.json";
};

struct AttackSection {
  Point x0{0.45, 0.3};
  double epsilon = 0.25;
  double tau = 0.025;
  double horizon = 1.0;
  std::optional<std::size_t> steps;  // default: ceil(horizon / tau)
  std::string scheme = "ifgsm";      // attack command: ifgsm | fgsm
  std::vector<double> taus{0.2, 0.1, 0.02, 0.001};  // flow command grid
  std::optional<double> target;                     // default: predicted class at x0
};

struct StudySection {
  std::vector<double> taus{0.2, 0.1, 0.05, 0.025};
  std::size_t samples = 50;
  double horizon = 1.0;
  std::optional<double> epsilon = 0.25;
  Point sample_lower{-1.0, -0.5};
  Point sample_upper{2.0, 1.0};
  std::string energy = "net";     // net | quadratic
  std::string minmove = "cbo";    // cbo | ifgsm (degenerate self-comparison)
};

struct MeasureSection {
  std::optional<std::string> cloud;  // CSV path; otherwise a two-moons sample
  std::size_t generate_count = 20;
  double generate_noise = 0.1;
  std::string scheme = "ifgsm";
  double tau = 0.025;
  double epsilon = 0.25;
  std::string budget_mode = "horizon";  // horizon | indicator
  double horizon = 1.0;                 // indicator mode only
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  NetSection net;
  AttackSection attack;
  StudySection study;
  MeasureSection measure;
  CboConfig cbo;
  bool cbo_seed_set = false;

  // Derived seeds keep the stages independent of each other.
  std::uint64_t data_seed() const { return seed; }
  std::uint64_t init_seed() const { return seed + 1; }
  std::uint64_t train_seed() const { return seed + 2; }
  std::uint64_t solver_seed() const { return cbo_seed_set ? cbo.seed : seed + 3; }
  std::uint64_t sample_seed() const { return seed + 4; }

  CboConfig solver_config() const {
    CboConfig c = cbo;
    c.seed = solver_seed();
    return c;
  }

  std::string path(const std::string& name) const { return (std::filesystem::path(output_dir) / name).string(); }

  // Relative model paths are resolved against the output directory.
  std::string model_path() const {
    const std::filesystem::path p(net.model);
    return p.is_absolute() ? p.string() : path(net.model);
  }
};

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline Point get_point(const nlohmann::json& j, const char* key, const Point& fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return Point(get_or<std::vector<double>>(j, key, {}));
}

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite and > 0");
}

inline std::size_t steps_for(double horizon, double tau) {
  return static_cast<std::size_t>(std::ceil(horizon / tau - 1e-9));
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  using detail::get_or;
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!doc.contains("version")) throw ConfigError("config is missing the schema 'version' tag");
  if (doc.at("version") != kConfigVersion) throw ConfigError("unsupported config version");

  ExperimentConfig c;
  c.seed = get_or<std::uint64_t>(doc, "seed", c.seed);
  c.output_dir = get_or<std::string>(doc, "output_dir", c.output_dir);

  const auto empty = nlohmann::json::object();
  const auto& n = doc.contains("net") ? doc.at("net") : empty;
  try {
    c.net.activation = net::parse_activation(get_or<std::string>(n, "activation", "gelu"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  c.net.width = get_or(n, "width", c.net.width);
  c.net.blocks = get_or(n, "blocks", c.net.blocks);
  c.net.samples = get_or(n, "samples", c.net.samples);
  c.net.noise = get_or(n, "noise", c.net.noise);
  c.net.train.epochs = get_or(n, "epochs", c.net.train.epochs);
  c.net.train.batch_size = get_or(n, "batch_size", c.net.train.batch_size);
  c.net.train.learning_rate = get_or(n, "learning_rate", c.net.train.learning_rate);
  c.net.train.beta1 = get_or(n, "beta1", c.net.train.beta1);
  c.net.train.beta2 = get_or(n, "beta2", c.net.train.beta2);
  c.net.train.adam_epsilon = get_or(n, "adam_epsilon", c.net.train.adam_epsilon);
  c.net.model = get_or(n, "model", c.net.model);
  if (c.net.samples == 0 || c.net.train.batch_size == 0) throw ConfigError("net: samples and batch_size must be >= 1");

  const auto& a = doc.contains("attack") ? doc.at("attack") : empty;
  c.attack.x0 = detail::get_point(a, "x0", c.attack.x0);
  c.attack.epsilon = get_or(a, "epsilon", c.attack.epsilon);
  c.attack.tau = get_or(a, "tau", c.attack.tau);
  c.attack.horizon = get_or(a, "horizon", c.attack.horizon);
  if (a.contains("steps") && !a.at("steps").is_null()) c.attack.steps = get_or<std::size_t>(a, "steps", 0);
  c.attack.scheme = get_or(a, "scheme", c.attack.scheme);
  c.attack.taus = get_or(a, "taus", c.attack.taus);
  if (a.contains("target") && !a.at("target").is_null()) c.attack.target = get_or<double>(a, "target", 0.0);
  detail::require_positive(c.attack.epsilon, "attack.epsilon");
  detail::require_positive(c.attack.tau, "attack.tau");
  detail::require_positive(c.attack.horizon, "attack.horizon");
  for (double t : c.attack.taus) detail::require_positive(t, "attack.taus entries");
  if (c.attack.scheme != "ifgsm" && c.attack.scheme != "fgsm") throw ConfigError("attack.scheme must be ifgsm or fgsm");

  const auto& s = doc.contains("study") ? doc.at("study") : empty;
  c.study.taus = get_or(s, "taus", c.study.taus);
  c.study.samples = get_or(s, "samples", c.study.samples);
  c.study.horizon = get_or(s, "horizon", c.study.horizon);
  if (s.contains("epsilon")) {
    c.study.epsilon = s.at("epsilon").is_null() ? std::nullopt : std::optional<double>(get_or<double>(s, "epsilon", 0.0));
  }
  c.study.sample_lower = detail::get_point(s, "sample_lower", c.study.sample_lower);
  c.study.sample_upper = detail::get_point(s, "sample_upper", c.study.sample_upper);
  c.study.energy = get_or(s, "energy", c.study.energy);
  c.study.minmove = get_or(s, "minmove", c.study.minmove);
  for (double t : c.study.taus) detail::require_positive(t, "study.taus entries");
  detail::require_positive(c.study.horizon, "study.horizon");
  if (c.study.epsilon) detail::require_positive(*c.study.epsilon, "study.epsilon");
  if (c.study.samples == 0) throw ConfigError("study.samples must be >= 1");
  if (c.study.sample_lower.size() != c.study.sample_upper.size()) throw ConfigError("study sample box dimensions differ");
  if (c.study.energy != "net" && c.study.energy != "quadratic") throw ConfigError("study.energy must be net or quadratic");
  if (c.study.minmove != "cbo" && c.study.minmove != "ifgsm") throw ConfigError("study.minmove must be cbo or ifgsm");

  const auto& m = doc.contains("measure") ? doc.at("measure") : empty;
  if (m.contains("cloud") && !m.at("cloud").is_null()) c.measure.cloud = get_or<std::string>(m, "cloud", "");
  c.measure.generate_count = get_or(m, "generate_count", c.measure.generate_count);
  c.measure.generate_noise = get_or(m, "generate_noise", c.measure.generate_noise);
  c.measure.scheme = get_or(m, "scheme", c.measure.scheme);
  c.measure.tau = get_or(m, "tau", c.measure.tau);
  c.measure.epsilon = get_or(m, "epsilon", c.measure.epsilon);
  c.measure.budget_mode = get_or(m, "budget_mode", c.measure.budget_mode);
  c.measure.horizon = get_or(m, "horizon", c.measure.horizon);
  detail::require_positive(c.measure.tau, "measure.tau");
  detail::require_positive(c.measure.epsilon, "measure.epsilon");
  if (c.measure.budget_mode != "horizon" && c.measure.budget_mode != "indicator") {
    throw ConfigError("measure.budget_mode must be horizon or indicator");
  }
  try {
    parse_cloud_scheme(c.measure.scheme);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  const auto& b = doc.contains("cbo") ? doc.at("cbo") : empty;
  c.cbo.particle_count = get_or(b, "particle_count", c.cbo.particle_count);
  c.cbo.noise_scale = get_or(b, "noise_scale", c.cbo.noise_scale);
  c.cbo.time_step = get_or(b, "time_step", c.cbo.time_step);
  c.cbo.weight_sharpness = get_or(b, "weight_sharpness", c.cbo.weight_sharpness);
  c.cbo.inner_steps = get_or(b, "inner_steps", c.cbo.inner_steps);
  c.cbo.drift_rate = get_or(b, "drift_rate", c.cbo.drift_rate);
  if (b.contains("seed") && !b.at("seed").is_null()) {
    c.cbo.seed = get_or<std::uint64_t>(b, "seed", 0);
    c.cbo_seed_set = true;
  }
  try {
    c.cbo.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  try {
    return parse_config(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

// Fully resolved configuration, echoed into every JSON output.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {
      {"version", kConfigVersion},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"net",
       {{"activation", net::to_string(c.net.activation)},
        {"width", c.net.width},
        {"blocks", c.net.blocks},
        {"samples", c.net.samples},
        {"noise", c.net.noise},
        {"epochs", c.net.train.epochs},
        {"batch_size", c.net.train.batch_size},
        {"learning_rate", c.net.train.learning_rate},
        {"beta1", c.net.train.beta1},
        {"beta2", c.net.train.beta2},
        {"adam_epsilon", c.net.train.adam_epsilon},
        {"model", c.net.model}}},
      {"attack",
       {{"x0", c.attack.x0.vector()},
        {"epsilon", c.attack.epsilon},
        {"tau", c.attack.tau},
        {"horizon", c.attack.horizon},
        {"steps", opt(c.attack.steps)},
        {"scheme", c.attack.scheme},
        {"taus", c.attack.taus},
        {"target", opt(c.attack.target)}}},
      {"study",
       {{"taus", c.study.taus},
        {"samples", c.study.samples},
        {"horizon", c.study.horizon},
        {"epsilon", opt(c.study.epsilon)},
        {"sample_lower", c.study.sample_lower.vector()},
        {"sample_upper", c.study.sample_upper.vector()},
        {"energy", c.study.energy},
        {"minmove", c.study.minmove}}},
      {"measure",
       {{"cloud", opt(c.measure.cloud)},
        {"generate_count", c.measure.generate_count},
        {"generate_noise", c.measure.generate_noise},
        {"scheme", c.measure.scheme},
        {"tau", c.measure.tau},
        {"epsilon", c.measure.epsilon},
        {"budget_mode", c.measure.budget_mode},
        {"horizon", c.measure.horizon}}},
      {"cbo",
       {{"particle_count", c.cbo.particle_count},
        {"noise_scale", c.cbo.noise_scale},
        {"time_step", c.cbo.time_step},
        {"weight_sharpness", c.cbo.weight_sharpness},
        {"inner_steps", c.cbo.inner_steps},
        {"drift_rate", c.cbo.drift_rate},
        {"seed", c.solver_seed()}}},
  };
}

inline void write_json(const std::string& path, const nlohmann::json& doc) { io::write_text(path, doc.dump(2) + "\n"); }

inline void require_output_dir(const ExperimentConfig& c) {
  if (!std::filesystem::is_directory(c.output_dir)) {
    throw IoError("output directory '" + c.output_dir + "' does not exist");
  }
}

inline net::Mlp load_trained_model(const ExperimentConfig& c) {
  const std::string p = c.model_path();
  if (!std::filesystem::exists(p)) throw ConfigError("model file '" + p + "' does not exist (run train first)");
  return net::load_model(p);
}

// Adversarial energy E(x) = -|h(x) - y|^2 in l-infinity space, optionally with
// the budget indicator of B_eps(center).
inline Energy adversarial_energy(const net::InputGradient& model, double label,
                                 std::optional<BoxConstraint> budget = std::nullopt) {
  return Energy([&model, label](const Point& x) { return -model.loss(x, label); },
                [&model, label](const Point& x) { return -model.gradient(x, label); }, PNorm::infinity(),
                std::move(budget));
}

inline double predicted_label(const net::InputGradient& model, const Point& x) {
  return model.output(x) >= 0.5 ? 1.0 : 0.0;
}

// ---- train -----------------------------------------------------------------

struct TrainOutcome {
  net::TrainResult result;
  net::Dataset data;
};

inline TrainOutcome cmd_train(const ExperimentConfig& c) {
  require_output_dir(c);
  TrainOutcome out;
  out.data = net::two_moons(c.net.samples, c.net.noise, c.data_seed());
  net::TrainConfig tc = c.net.train;
  tc.seed = c.train_seed();
  out.result = net::train(net::Mlp::block_network(c.net.activation, c.net.width, c.net.blocks, c.init_seed()), out.data, tc);

  net::save_model(out.result.net, c.model_path());
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < out.result.loss_history.size(); ++e) {
    csv += std::to_string(e + 1) + "," + io::format_double(out.result.loss_history[e]) + "\n";
  }
  io::write_text(c.path("loss_history.csv"), csv);
  io::write_text(c.path("dataset.csv"), net::dataset_csv(out.data));
  write_json(c.path("train_summary.json"), {{"version", kConfigVersion},
                                            {"config", to_json(c)},
                                            {"final_loss", out.result.final_loss},
                                            {"final_mse", net::mean_squared_error(out.result.net, out.data)},
                                            {"epochs", out.result.loss_history.size()}});
  return out;
}

// ---- attack / flow -----------------------------------------------------------

struct AttackOutcome {
  Trajectory trajectory;
  double label = 0.0;
  double initial_output = 0.0;
  double final_output = 0.0;
  bool flipped = false;
};

// Untargeted attack on the class predicted at x0 (or the configured target).
inline AttackOutcome run_attack(const net::InputGradient& model, const AttackSection& a) {
  AttackOutcome out;
  out.label = a.target ? *a.target : predicted_label(model, a.x0);
  auto loss_grad = [&model, label = out.label](const Point& x) { return model.gradient(x, label); };
  if (a.scheme == "fgsm") {
    out.trajectory = Trajectory{a.x0, a.epsilon, {a.x0, fgsm_step(loss_grad(a.x0), a.x0, a.epsilon)}, PNorm::infinity()};
  } else {
    const std::size_t steps = a.steps ? *a.steps : detail::steps_for(a.horizon, a.tau);
    out.trajectory = ifgsm(loss_grad, a.x0, a.epsilon, a.tau, steps);
  }
  out.initial_output = model.output(a.x0);
  out.final_output = model.output(out.trajectory.iterates.back());
  out.flipped = (out.initial_output >= 0.5) != (out.final_output >= 0.5);
  return out;
}

inline AttackOutcome cmd_attack(const ExperimentConfig& c) {
  require_output_dir(c);
  const net::InputGradient model(load_trained_model(c));
  AttackOutcome out = run_attack(model, c.attack);
  const Energy e = adversarial_energy(model, out.label, BoxConstraint(c.attack.x0, c.attack.epsilon));
  io::write_text(c.path("attack.csv"), trajectory_csv(out.trajectory, diagnostics(e, out.trajectory)));
  double worst = 0.0;
  for (const Point& x : out.trajectory.iterates) worst = std::max(worst, norm(x - c.attack.x0, PNorm::infinity()));
  write_json(c.path("attack.json"), {{"version", kConfigVersion},
                                     {"config", to_json(c)},
                                     {"label", out.label},
                                     {"initial_output", out.initial_output},
                                     {"final_output", out.final_output},
                                     {"flipped", out.flipped},
                                     {"max_displacement", worst},
                                     {"steps", out.trajectory.steps()}});
  return out;
}

inline std::string tau_tag(double tau) { return io::format_double(tau); }

struct FlowFiles {
  std::vector<std::string> paths;
};

// IFGSM and minimizing movement from attack.x0 for every tau of attack.taus.
inline FlowFiles cmd_flow(const ExperimentConfig& c) {
  require_output_dir(c);
  const net::InputGradient model(load_trained_model(c));
  const double label = c.attack.target ? *c.attack.target : predicted_label(model, c.attack.x0);
  const Energy e = adversarial_energy(model, label, BoxConstraint(c.attack.x0, c.attack.epsilon));
  const InnerSolver solver = make_cbo_solver(c.solver_config());
  FlowFiles files;
  nlohmann::json runs = nlohmann::json::array();
  for (double tau : c.attack.taus) {
    const std::size_t steps = c.attack.steps ? *c.attack.steps : detail::steps_for(c.attack.horizon, tau);
    const Trajectory fg = ifgsm([&](const Point& x) { return model.gradient(x, label); }, c.attack.x0, c.attack.epsilon,
                                tau, steps);
    Trajectory mm;
    try {
      mm = minimizing_movement(e, c.attack.x0, tau, steps, solver);
    } catch (const Error& err) {
      throw SolverFailure("flow tau=" + tau_tag(tau) + ": " + err.what());
    }
    const std::string fg_name = "flow_ifgsm_tau_" + tau_tag(tau) + ".csv";
    const std::string mm_name = "flow_minmove_tau_" + tau_tag(tau) + ".csv";
    io::write_text(c.path(fg_name), trajectory_csv(fg, diagnostics(e, fg)));
    io::write_text(c.path(mm_name), trajectory_csv(mm, diagnostics(e, mm)));
    files.paths.push_back(c.path(fg_name));
    files.paths.push_back(c.path(mm_name));
    runs.push_back({{"tau", tau}, {"steps", steps}, {"ifgsm", fg_name}, {"minmove", mm_name},
                    {"max_deviation", max_deviation(fg, mm)}});
  }
  write_json(c.path("flow.json"), {{"version", kConfigVersion}, {"config", to_json(c)}, {"label", label}, {"runs", runs}});
  return files;
}

// ---- study -----------------------------------------------------------------

struct StudyRecord {
  double tau = 0.0;
  double e_tau = 0.0;
  std::size_t samples = 0;
  std::vector<double> per_sample;           // max_k |xhat^k - x^k|_inf
  std::vector<double> mean_energy_semi;     // sample mean of E(xhat^k)
  std::vector<double> mean_energy_minmove;  // sample mean of E(x^k)
  std::vector<double> mean_speed_minmove;   // sample mean of |x^k - x^{k-1}| / tau
};

struct StudyReport {
  std::vector<StudyRecord> records;
};

inline std::vector<Point> study_initial_points(const ExperimentConfig& c) {
  std::mt19937_64 rng(c.sample_seed());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> starts;
  for (std::size_t s = 0; s < c.study.samples; ++s) {
    std::vector<double> x(c.study.sample_lower.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = c.study.sample_lower[i] + (c.study.sample_upper[i] - c.study.sample_lower[i]) * unit(rng);
    }
    starts.emplace_back(std::move(x));
  }
  return starts;
}

// Paired semi-implicit (IFGSM) and minimizing-movement runs from S seeded
// initial points for k = 1..floor(T / tau); e_tau averages the per-sample
// maximal l-infinity distance.
inline StudyReport run_study(const ExperimentConfig& c, const net::InputGradient* model) {
  if (c.study.energy == "net" && model == nullptr) throw ConfigError("study: net energy requires a model");
  const std::vector<Point> starts = study_initial_points(c);
  const InnerSolver solver = make_cbo_solver(c.solver_config());
  StudyReport report;
  for (double tau : c.study.taus) {
    const auto steps = static_cast<std::size_t>(std::floor(c.study.horizon / tau + 1e-9));
    const std::size_t n = starts.size();
    std::vector<Trajectory> semi(n), mm(n);
    std::vector<FlowDiagnostics> semi_diag(n), mm_diag(n);
    parallel_for(n, [&](std::size_t s) {
      std::optional<BoxConstraint> budget;
      if (c.study.epsilon) budget = BoxConstraint(starts[s], *c.study.epsilon);
      const Energy e = c.study.energy == "net"
                           ? adversarial_energy(*model, predicted_label(*model, starts[s]), budget)
                           : quadratic_energy(PNorm::infinity()).with_indicator(budget);
      try {
        semi[s] = semi_implicit_minmove(e, starts[s], tau, steps, solver);
        mm[s] = c.study.minmove == "cbo" ? minimizing_movement(e, starts[s], tau, steps, solver, s * kParticleStreamStride)
                                         : semi[s];
        semi_diag[s] = diagnostics(e, semi[s]);
        mm_diag[s] = diagnostics(e, mm[s]);
      } catch (const Error& err) {
        throw ParticleError(s, std::string("study sample failed: ") + err.what());
      }
    });
    StudyRecord rec;
    rec.tau = tau;
    rec.samples = n;
    for (std::size_t s = 0; s < n; ++s) rec.per_sample.push_back(max_deviation(semi[s], mm[s]));
    rec.e_tau = averaged_max_deviation(semi, mm);
    rec.mean_energy_semi.assign(steps + 1, 0.0);
    rec.mean_energy_minmove.assign(steps + 1, 0.0);
    rec.mean_speed_minmove.assign(steps, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t k = 0; k <= steps; ++k) {
        rec.mean_energy_semi[k] += semi_diag[s].energies[k] / static_cast<double>(n);
        rec.mean_energy_minmove[k] += mm_diag[s].energies[k] / static_cast<double>(n);
      }
      for (std::size_t k = 0; k < steps; ++k) rec.mean_speed_minmove[k] += mm_diag[s].metric_derivatives[k] / static_cast<double>(n);
    }
    report.records.push_back(std::move(rec));
  }
  return report;
}

inline StudyReport cmd_study(const ExperimentConfig& c) {
  require_output_dir(c);
  std::optional<net::InputGradient> model;
  if (c.study.energy == "net") model.emplace(load_trained_model(c));
  const StudyReport report = run_study(c, model ? &*model : nullptr);
  std::string csv = "tau,e_tau,S\n";
  nlohmann::json records = nlohmann::json::array();
  for (const StudyRecord& r : report.records) {
    csv += io::format_double(r.tau) + "," + io::format_double(r.e_tau) + "," + std::to_string(r.samples) + "\n";
    records.push_back({{"tau", r.tau},
                       {"e_tau", r.e_tau},
                       {"S", r.samples},
                       {"per_sample_max_distance", r.per_sample},
                       {"mean_energy_ifgsm", r.mean_energy_semi},
                       {"mean_energy_minmove", r.mean_energy_minmove},
                       {"mean_metric_derivative_minmove", r.mean_speed_minmove}});
  }
  io::write_text(c.path("study.csv"), csv);
  write_json(c.path("study.json"), {{"version", kConfigVersion}, {"config", to_json(c)}, {"records", records}});
  return report;
}

// ---- measure-flow ------------------------------------------------------------

struct MeasureStep {
  std::size_t k = 0;
  double t = 0.0;
  double w_infty = 0.0;
  double potential = 0.0;
  double slope = 0.0;
};

struct MeasureOutcome {
  CloudFlow flow;
  std::vector<MeasureStep> steps;
};

inline ParticleCloud measure_cloud(const ExperimentConfig& c) {
  if (c.measure.cloud) {
    if (!std::filesystem::exists(*c.measure.cloud)) throw ConfigError("cloud file '" + *c.measure.cloud + "' does not exist");
    return parse_cloud_csv(io::read_text(*c.measure.cloud));
  }
  const net::Dataset d = net::two_moons(c.measure.generate_count, c.measure.generate_noise, c.sample_seed());
  ParticleCloud cloud{d.inputs, std::vector<int>{}};
  for (double l : d.labels) cloud.labels->push_back(static_cast<int>(l));
  return cloud;
}

// Distributional adversary: every labeled particle ascends its own loss
// |h(x) - y|^2. Horizon mode stops at T = eps; indicator mode clips each
// particle to its own eps-box and runs to measure.horizon.
inline MeasureOutcome run_measure(const ExperimentConfig& c, const net::InputGradient& model, const ParticleCloud& cloud) {
  PushforwardOptions opts;
  opts.scheme = parse_cloud_scheme(c.measure.scheme);
  opts.tau = c.measure.tau;
  if (c.measure.budget_mode == "indicator") {
    opts.budget = c.measure.epsilon;
    opts.steps = detail::steps_for(c.measure.horizon, c.measure.tau);
  } else {
    opts.steps = detail::steps_for(c.measure.epsilon, c.measure.tau);
  }
  const CloudEnergy energy = [&model](std::optional<int> label) {
    if (!label) throw InvalidArgument("measure-flow: every particle needs a label");
    return adversarial_energy(model, static_cast<double>(*label));
  };
  MeasureOutcome out;
  out.flow = pushforward_flow(cloud, energy, opts, make_cbo_solver(c.solver_config()));
  for (std::size_t k = 0; k < out.flow.clouds.size(); ++k) {
    const ParticleCloud& ck = out.flow.clouds[k];
    MeasureStep st;
    st.k = k;
    st.t = static_cast<double>(k) * opts.tau;
    st.w_infty = w_infty(ck, out.flow.clouds.front()).value;
    double pot = 0.0, sl = 0.0;
    for (std::size_t i = 0; i < ck.size(); ++i) {
      pot += eval(out.flow.energies[i], ck.points[i]);
      sl += slope(out.flow.energies[i], ck.points[i]);
    }
    st.potential = pot / static_cast<double>(ck.size());
    st.slope = sl / static_cast<double>(ck.size());
    out.steps.push_back(st);
  }
  return out;
}

inline MeasureOutcome cmd_measure(const ExperimentConfig& c) {
  require_output_dir(c);
  const net::InputGradient model(load_trained_model(c));
  const ParticleCloud cloud = measure_cloud(c);
  MeasureOutcome out = run_measure(c, model, cloud);
  const std::size_t width = std::to_string(out.flow.clouds.size() - 1).size();
  std::string csv = "k,t,w_infty,potential_energy,cloud_slope\n";
  nlohmann::json steps = nlohmann::json::array();
  for (const MeasureStep& st : out.steps) {
    std::string idx = std::to_string(st.k);
    idx.insert(0, width - idx.size(), '0');
    io::write_text(c.path("cloud_step_" + idx + ".csv"), cloud_csv(out.flow.clouds[st.k]));
    csv += std::to_string(st.k) + "," + io::format_double(st.t) + "," + io::format_double(st.w_infty) + "," +
           io::format_double(st.potential) + "," + io::format_double(st.slope) + "\n";
    steps.push_back({{"k", st.k}, {"t", st.t}, {"w_infty", st.w_infty}, {"potential_energy", st.potential},
                     {"cloud_slope", st.slope}});
  }
  io::write_text(c.path("measure_summary.csv"), csv);
  write_json(c.path("measure_summary.json"),
             {{"version", kConfigVersion}, {"config", to_json(c)}, {"particles", cloud.size()}, {"steps", steps}});
  return out;
}

}  // namespace maxslope::experiment
