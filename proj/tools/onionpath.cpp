// Command-line front end: run the transfer-time grid, report anonymity
// degrees, sweep graph density, or watch the latency graph fill up.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "onionpath/error.hpp"
#include "onionpath/experiment.hpp"

namespace op = onionpath;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file (defaults to the built-in 100-relay setup)");
  cmd->add_option("--seed", c.seed, "Seed; overrides ONIONPATH_SEED and the config");
  cmd->add_option("--out", c.out, "Output path (stdout when omitted)");
  cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

// Seed precedence: --seed, then ONIONPATH_SEED, then the config file.
op::SimulationConfig resolve_config(const Common& c) {
  op::SimulationConfig config = c.config.empty() ? op::default_config() : op::load_config(c.config);
  if (const char* env = std::getenv(std::string(op::kSeedEnvVar).c_str()); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      config.plan.seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw op::Error(op::Errc::parse_error, fmt::format("{}='{}' is not an unsigned integer", op::kSeedEnvVar, env));
    }
  }
  if (c.seed) config.plan.seed = *c.seed;
  return config;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
  } else {
    op::write_text(c.out, text);
  }
}

int cmd_run(const Common& c, std::optional<std::size_t> repetitions, std::optional<std::size_t> threads,
            const std::string& samples_path) {
  op::SimulationConfig config = resolve_config(c);
  if (repetitions) config.plan.repetitions = *repetitions;
  if (threads) config.plan.threads = *threads;
  const op::ExperimentResult result = op::run_experiment(config);
  const auto format = op::parse_format(c.format);
  emit(c, format == op::OutputFormat::csv ? op::results_csv(result) : op::results_json(result).dump(2) + "\n");
  if (!samples_path.empty()) op::write_text(samples_path, op::samples_csv(result));
  for (const auto& cell : result.cells) {
    if (!cell.error.empty()) {
      std::cerr << fmt::format("cell {} page={}KB delta={} failed: {}\n", op::to_string(cell.strategy), cell.page_kb,
                               cell.delta, cell.error);
    }
  }
  return result.ok() ? 0 : 1;
}

int cmd_degrees(const Common& c) {
  const op::SimulationConfig config = resolve_config(c);
  const op::World world = op::build_world(config);
  const op::DegreeReport report = op::degree_report(config.plan, world.relays, world.graph);
  if (op::parse_format(c.format) == op::OutputFormat::json) {
    emit(c, op::degrees_json(report).dump(2) + "\n");
  } else {
    std::string out = "strategy,delta,degree,estimated,error\n";
    auto row = [&](std::string_view name, std::string delta, const op::DegreeEntry& e) {
      out += e.degree ? fmt::format("{},{},{:.6f},{},\n", name, delta, e.degree->value, e.degree->estimated)
                      : fmt::format("{},{},,,\"{}\"\n", name, delta, e.error);
    };
    row("rnd", "", report.rnd);
    row("geo", "", report.geo);
    row("bw", "", report.bw);
    for (const auto& [delta, entry] : report.grp) row("grp", std::to_string(delta), entry);
    emit(c, out);
  }
  bool ok = report.rnd.degree && report.geo.degree && report.bw.degree;
  for (const auto& [_, entry] : report.grp) ok = ok && entry.degree.has_value();
  return ok ? 0 : 1;
}

int cmd_sweep(const Common& c, std::size_t n, std::size_t lambda, const std::vector<double>& densities,
              std::size_t trials) {
  const op::SimulationConfig config = resolve_config(c);
  op::Rng rng(op::derive_seed(config.plan.seed, {op::tag("density-sweep")}));
  const auto points = op::density_sweep(n, lambda, densities, trials, rng);
  emit(c, op::parse_format(c.format) == op::OutputFormat::csv ? op::sweep_csv(points)
                                                              : op::sweep_json(points).dump(2) + "\n");
  return 0;
}

int cmd_probe_demo(const Common& c, std::size_t rounds, std::size_t every, std::optional<std::size_t> live_ms) {
  op::SimulationConfig config = resolve_config(c);
  config.plan.warmup_rounds = 0;
  const op::World world = op::build_world(config);
  std::vector<op::NodeId> ids;
  for (const auto& n : world.relays) ids.push_back(n.id);
  ids.push_back(world.client.id);
  op::LatencyMonitor monitor(op::LatencyGraph::init(ids, world.client.id, 0), world.network.oracle(),
                             config.plan.probes_per_round, op::derive_seed(config.plan.seed, {op::tag("warmup")}));
  if (live_ms) {
    monitor.start(std::chrono::milliseconds(*live_ms));
    std::cerr << fmt::format("probing every {} ms for {} rounds\n", *live_ms, rounds);
    while (static_cast<std::size_t>(monitor.now()) < rounds) {
      std::this_thread::sleep_for(std::chrono::milliseconds(*live_ms));
      const auto g = monitor.snapshot();
      std::cerr << fmt::format("t={} edges={} density={:.4f}\n", monitor.now(), g.edges().size(), g.density());
    }
    monitor.stop();
  } else {
    std::string trace = "round,edges,density\n";
    for (std::size_t r = 1; r <= rounds; ++r) {
      monitor.step();
      if (r % every == 0 || r == rounds) {
        const auto g = monitor.snapshot();
        trace += fmt::format("{},{},{:.6f}\n", r, g.edges().size(), g.density());
      }
    }
    std::cerr << trace;
  }
  emit(c, monitor.snapshot().to_json().dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Onion-routing circuit selection simulator"};
  app.require_subcommand(1);

  Common run_opts, deg_opts, sweep_opts, probe_opts;

  auto* run = app.add_subcommand("run", "Measure simulated transfer times over the strategy grid");
  add_common(run, run_opts);
  std::optional<std::size_t> repetitions, threads;
  std::string samples_path;
  run->add_option("--repetitions", repetitions, "Override repetitions per cell");
  run->add_option("--threads", threads, "Worker threads (results do not depend on this)");
  run->add_option("--samples", samples_path, "Also write one row per repetition to this CSV");

  auto* degrees = app.add_subcommand("degrees", "Anonymity degree of every strategy");
  add_common(degrees, deg_opts);

  auto* sweep = app.add_subcommand("density-sweep", "Mean latency-graph degree against graph density");
  add_common(sweep, sweep_opts);
  std::size_t n = 20, lambda = 2, trials = 20;
  std::vector<double> densities{0.2, 0.4, 0.6, 0.8, 1.0};
  sweep->add_option("--vertices", n, "Vertices per random graph")->capture_default_str();
  sweep->add_option("--lambda", lambda, "Path length in edges")->capture_default_str();
  sweep->add_option("--densities", densities, "Edge fractions to sample")->delimiter(',')->capture_default_str();
  sweep->add_option("--trials", trials, "Random graphs per density")->capture_default_str();

  auto* probe = app.add_subcommand("probe-demo", "Run the measurement loop and dump the latency graph as JSON");
  add_common(probe, probe_opts);
  std::size_t rounds = 2400, every = 200;
  std::optional<std::size_t> live_ms;
  probe->add_option("--rounds", rounds, "Measurement rounds")->capture_default_str();
  probe->add_option("--every", every, "Trace interval in rounds")->capture_default_str()->check(CLI::PositiveNumber);
  probe->add_option("--live", live_ms, "Run on a background thread with this many ms between rounds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts, repetitions, threads, samples_path);
    if (degrees->parsed()) return cmd_degrees(deg_opts);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, n, lambda, densities, trials);
    if (probe->parsed()) return cmd_probe_demo(probe_opts, rounds, every, live_ms);
  } catch (const op::Error& ex) {
    std::cerr << fmt::format("error ({}): {}\n", op::to_string(ex.code()), ex.what());
    return 2;
  }
  return 0;
}
