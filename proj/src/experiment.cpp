#include "onionpath/experiment.hpp"

#include <fmt/format.h>

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <thread>

#include "onionpath/error.hpp"

namespace onionpath {

namespace {

using ojson = nlohmann::ordered_json;

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

std::uint64_t strategy_index(Strategy s) { return static_cast<std::uint64_t>(s); }

std::vector<double> bandwidth_sample(const SimulationConfig& config) {
  if (!config.bandwidth.values.empty()) return config.bandwidth.values;
  Rng rng(derive_seed(config.plan.seed, {tag("bandwidth-sample")}));
  return synthetic_bandwidth_sample(config.bandwidth.sample_size, config.bandwidth.median_kbps,
                                    config.bandwidth.sigma, rng);
}

DegreeEntry guarded_degree(auto&& compute) {
  DegreeEntry entry;
  try {
    entry.degree = compute();
  } catch (const Error& ex) {
    entry.error = ex.what();
  }
  return entry;
}

struct CellJob {
  Strategy strategy;
  double page_kb;
  std::size_t delta;
};

struct CellInputs {
  const SimulationConfig& config;
  const World& world;
  const UndirectedGraph& weighted;
  const std::map<NodeId, double>& bandwidth_of;
};

Circuit build_circuit(const CellInputs& in, Strategy strategy, std::size_t delta, Rng& rng) {
  const ExperimentPlan& plan = in.config.plan;
  const NodeId client = in.world.client.id;
  switch (strategy) {
    case Strategy::rnd: return select_random(in.world.relays, client, delta, rng);
    case Strategy::geo: return select_geo(in.world.relays, client, delta, plan.home_country, rng);
    case Strategy::bw: return select_bw(in.world.relays, client, delta, rng);
    case Strategy::grp: return select_grp(in.weighted, client, delta, plan.k, plan.max_iter, rng);
  }
  throw Error(Errc::invalid_argument, "unknown strategy");
}

CellResult run_cell(const CellInputs& in, const CellJob& job) {
  const ExperimentPlan& plan = in.config.plan;
  CellResult cell;
  cell.strategy = job.strategy;
  cell.page_kb = job.page_kb;
  cell.delta = job.delta;
  try {
    TransferModel transfer = in.config.transfer;
    transfer.page_kb = job.page_kb;
    // All circuits are timed just after the warm-up ended.
    const Tick t_eval = static_cast<Tick>(plan.warmup_rounds) + 1;
    std::size_t fallbacks = 0;
    for (std::size_t rep = 0; rep < plan.repetitions; ++rep) {
      Rng rng(derive_seed(plan.seed, {tag("cell"), strategy_index(job.strategy), bits(job.page_kb), job.delta, rep}));
      const Circuit circuit = build_circuit(in, job.strategy, job.delta, rng);
      fallbacks += circuit.provenance == Provenance::random_fallback;
      std::vector<double> latencies;
      std::vector<double> bandwidths;
      for (std::size_t i = 0; i < circuit.links.size(); ++i) {
        const auto [a, b] = circuit.links[i];
        // The nonce ignores the strategy: the same link at the same repetition
        // sees the same jitter whichever strategy picked it.
        const std::uint64_t nonce = derive_seed(plan.seed, {tag("transfer"), bits(job.page_kb), job.delta, rep, i});
        latencies.push_back(in.world.network.sample_latency(a, b, t_eval, nonce));
        bandwidths.push_back(in.bandwidth_of.at(circuit.relays[i]));
      }
      cell.samples.push_back(transfer_time(transfer, circuit, latencies, bandwidths));
    }
    const SampleStats stats = summarize(cell.samples);
    cell.min_s = stats.min;
    cell.max_s = stats.max;
    cell.avg_s = stats.mean;
    cell.std_s = stats.stddev;
    if (job.strategy == Strategy::grp) {
      cell.fallback_rate = static_cast<double>(fallbacks) / static_cast<double>(plan.repetitions);
    }
  } catch (const Error& ex) {
    cell.samples.clear();
    cell.error = ex.what();
  }
  return cell;
}

void attach_degree(CellResult& cell, const DegreeReport& report) {
  const DegreeEntry* entry = nullptr;
  switch (cell.strategy) {
    case Strategy::rnd: entry = &report.rnd; break;
    case Strategy::geo: entry = &report.geo; break;
    case Strategy::bw: entry = &report.bw; break;
    case Strategy::grp: {
      auto it = report.grp.find(cell.delta);
      if (it != report.grp.end()) entry = &it->second;
      break;
    }
  }
  if (entry != nullptr && entry->degree) {
    cell.degree = entry->degree->value;
    cell.degree_estimated = entry->degree->estimated;
  }
}

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

ojson degree_entry_json(const DegreeEntry& e) {
  if (!e.degree) return {{"error", e.error}};
  return {{"value", e.degree->value},
          {"entropy_bits", e.degree->entropy_bits},
          {"max_entropy_bits", e.degree->max_entropy_bits},
          {"population_size", e.degree->population_size},
          {"estimated", e.degree->estimated}};
}

DegreeEntry degree_entry_from_json(const ojson& j) {
  DegreeEntry e;
  if (j.contains("error")) {
    e.error = j.at("error").get<std::string>();
    return e;
  }
  AnonymityDegree d;
  d.value = j.at("value").get<double>();
  d.entropy_bits = j.at("entropy_bits").get<double>();
  d.max_entropy_bits = j.at("max_entropy_bits").get<double>();
  d.population_size = j.at("population_size").get<std::size_t>();
  d.estimated = j.at("estimated").get<bool>();
  e.degree = d;
  return e;
}

}  // namespace

World build_world(const SimulationConfig& config) {
  validate(config.plan);
  PopulationSpec spec{config.countries, config.total, bandwidth_sample(config), config.cluster_count};
  Rng population_rng(derive_seed(config.plan.seed, {tag("population")}));
  std::vector<Node> relays = generate_population(spec, population_rng);

  // The client takes the first id after the relays and lives in the home country.
  Node client{node_id(static_cast<std::uint32_t>(relays.size())), config.plan.home_country, 1.0};
  std::map<NodeId, std::string> countries;
  for (const Node& n : relays) countries.emplace(n.id, n.country);
  countries.emplace(client.id, client.country);
  SimulatedNetwork network(config.latency, std::move(countries), derive_seed(config.plan.seed, {tag("network")}));

  std::vector<NodeId> ids;
  for (const Node& n : relays) ids.push_back(n.id);
  ids.push_back(client.id);
  LatencyMonitor monitor(LatencyGraph::init(ids, client.id, 0), network.oracle(), config.plan.probes_per_round,
                         derive_seed(config.plan.seed, {tag("warmup")}));
  monitor.run_rounds(config.plan.warmup_rounds);
  return World{std::move(relays), std::move(client), std::move(network), monitor.snapshot()};
}

DegreeReport degree_report(const ExperimentPlan& plan, const std::vector<Node>& population,
                           const LatencyGraph& graph) {
  DegreeReport report;
  StrategyContext ctx;
  ctx.nodes = population;
  ctx.home_country = plan.home_country;
  report.rnd = guarded_degree([&] { return strategy_degree(Strategy::rnd, ctx); });
  report.geo = guarded_degree([&] { return strategy_degree(Strategy::geo, ctx); });
  report.bw = guarded_degree([&] { return strategy_degree(Strategy::bw, ctx); });

  const AnalyticalGraph analytical = analytical_graph(graph);
  for (std::size_t delta : plan.circuit_lengths) {
    GrpDegreeOptions options;
    options.samples = plan.degree_samples;
    options.seed = derive_seed(plan.seed, {tag("degree"), delta});
    report.grp[delta] = guarded_degree([&] { return degree_grp(analytical, delta - 1, options); });
  }
  return report;
}

bool ExperimentResult::ok() const {
  for (const CellResult& c : cells) {
    if (!c.error.empty()) return false;
  }
  return true;
}

SampleStats summarize(const std::vector<double>& samples) {
  if (samples.empty()) throw Error(Errc::invalid_argument, "no samples to summarize");
  SampleStats s;
  s.min = samples.front();
  s.max = samples.front();
  double sum = 0.0;
  for (double v : samples) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
  }
  const double n = static_cast<double>(samples.size());
  s.mean = std::clamp(sum / n, s.min, s.max);
  double sq = 0.0;
  for (double v : samples) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / n);
  return s;
}

ExperimentResult run_experiment(const SimulationConfig& config) {
  const World world = build_world(config);
  const ExperimentPlan& plan = config.plan;

  ExperimentResult result;
  result.warmup_rounds = plan.warmup_rounds;
  result.warmup_edges = world.graph.edges().size();
  result.warmup_density = world.graph.density();
  // Degrees are computed once, before any cell runs.
  result.degrees = degree_report(plan, world.relays, world.graph);

  const UndirectedGraph weighted = world.graph.weighted_graph();
  std::map<NodeId, double> bandwidth_of;
  for (const Node& n : world.relays) bandwidth_of.emplace(n.id, n.bandwidth);
  const CellInputs inputs{config, world, weighted, bandwidth_of};

  std::vector<CellJob> jobs;
  for (Strategy s : plan.strategies) {
    for (double page : plan.page_sizes_kb) {
      for (std::size_t delta : plan.circuit_lengths) jobs.push_back({s, page, delta});
    }
  }
  result.cells.resize(jobs.size());

  // Each cell owns its RNG streams, so the thread count never changes results.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) result.cells[i] = run_cell(inputs, jobs[i]);
  };
  const std::size_t threads = std::min(plan.threads, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (CellResult& cell : result.cells) attach_degree(cell, result.degrees);
  return result;
}

std::vector<SweepPoint> density_sweep(std::size_t n, std::size_t lambda, const std::vector<double>& densities,
                                      std::size_t trials, Rng& rng) {
  const ExactLimits limits{};
  if (n > limits.max_vertices || lambda > limits.max_length) {
    throw Error(Errc::instance_too_large,
                fmt::format("density sweep needs n <= {} and lambda <= {}", limits.max_vertices, limits.max_length));
  }
  if (trials == 0) throw Error(Errc::invalid_argument, "density sweep needs at least one trial");
  std::vector<SweepPoint> points;
  for (double density : densities) {
    SweepPoint point;
    point.density = density;
    point.trials = trials;
    std::vector<double> values;
    for (std::size_t t = 0; t < trials; ++t) {
      const UndirectedGraph g = make_random_graph(n, density, rng);
      try {
        values.push_back(degree_grp(g, lambda).value);
      } catch (const Error& ex) {
        if (ex.code() != Errc::lb_undefined) throw;
        ++point.failures;
      }
    }
    if (!values.empty()) {
      double sum = 0.0;
      for (double v : values) sum += v;
      point.mean_degree = sum / static_cast<double>(values.size());
      if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - point.mean_degree) * (v - point.mean_degree);
        const double k = static_cast<double>(values.size());
        point.std_error = std::sqrt(sq / (k - 1.0)) / std::sqrt(k);
      }
    }
    points.push_back(point);
  }
  return points;
}

OutputFormat parse_format(std::string_view name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw Error(Errc::parse_error, fmt::format("unknown output format '{}' (expected csv|json)", name));
}

std::string results_csv(const ExperimentResult& result) {
  std::string out = "strategy,page_kb,delta,min_s,max_s,avg_s,std_s,degree,fallback_rate\n";
  for (const CellResult& c : result.cells) {
    if (!c.error.empty()) continue;
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", to_string(c.strategy), c.page_kb, c.delta, fixed(c.min_s),
                       fixed(c.max_s), fixed(c.avg_s), fixed(c.std_s), c.degree ? fixed(*c.degree) : "",
                       c.fallback_rate ? fixed(*c.fallback_rate) : "");
  }
  return out;
}

std::string samples_csv(const ExperimentResult& result) {
  std::string out = "strategy,page_kb,delta,repetition,seconds\n";
  for (const CellResult& c : result.cells) {
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      out += fmt::format("{},{},{},{},{}\n", to_string(c.strategy), c.page_kb, c.delta, i, fixed(c.samples[i]));
    }
  }
  return out;
}

nlohmann::ordered_json degrees_json(const DegreeReport& report) {
  ojson grp = ojson::object();
  for (const auto& [delta, entry] : report.grp) grp[std::to_string(delta)] = degree_entry_json(entry);
  return {{"rnd", degree_entry_json(report.rnd)},
          {"geo", degree_entry_json(report.geo)},
          {"bw", degree_entry_json(report.bw)},
          {"grp", grp}};
}

nlohmann::ordered_json results_json(const ExperimentResult& result) {
  ojson cells = ojson::array();
  for (const CellResult& c : result.cells) {
    ojson cell = {{"strategy", to_string(c.strategy)}, {"page_kb", c.page_kb}, {"delta", c.delta}};
    if (!c.error.empty()) {
      cell["error"] = c.error;
    } else {
      cell["min_s"] = c.min_s;
      cell["max_s"] = c.max_s;
      cell["avg_s"] = c.avg_s;
      cell["std_s"] = c.std_s;
      cell["samples"] = c.samples;
    }
    cell["degree"] = c.degree ? ojson(*c.degree) : ojson(nullptr);
    cell["degree_estimated"] = c.degree_estimated;
    cell["fallback_rate"] = c.fallback_rate ? ojson(*c.fallback_rate) : ojson(nullptr);
    cells.push_back(std::move(cell));
  }
  return {{"warmup",
           {{"rounds", result.warmup_rounds}, {"edges", result.warmup_edges}, {"density", result.warmup_density}}},
          {"degrees", degrees_json(result.degrees)},
          {"cells", cells}};
}

ExperimentResult results_from_json(const nlohmann::ordered_json& j) {
  try {
    ExperimentResult r;
    const ojson& w = j.at("warmup");
    r.warmup_rounds = w.at("rounds").get<std::size_t>();
    r.warmup_edges = w.at("edges").get<std::size_t>();
    r.warmup_density = w.at("density").get<double>();
    const ojson& d = j.at("degrees");
    r.degrees.rnd = degree_entry_from_json(d.at("rnd"));
    r.degrees.geo = degree_entry_from_json(d.at("geo"));
    r.degrees.bw = degree_entry_from_json(d.at("bw"));
    for (const auto& [key, entry] : d.at("grp").items()) {
      r.degrees.grp[std::stoul(key)] = degree_entry_from_json(entry);
    }
    for (const ojson& jc : j.at("cells")) {
      CellResult c;
      c.strategy = parse_strategy(jc.at("strategy").get<std::string>());
      c.page_kb = jc.at("page_kb").get<double>();
      c.delta = jc.at("delta").get<std::size_t>();
      if (jc.contains("error")) {
        c.error = jc.at("error").get<std::string>();
      } else {
        c.min_s = jc.at("min_s").get<double>();
        c.max_s = jc.at("max_s").get<double>();
        c.avg_s = jc.at("avg_s").get<double>();
        c.std_s = jc.at("std_s").get<double>();
        c.samples = jc.at("samples").get<std::vector<double>>();
      }
      if (!jc.at("degree").is_null()) c.degree = jc.at("degree").get<double>();
      c.degree_estimated = jc.at("degree_estimated").get<bool>();
      if (!jc.at("fallback_rate").is_null()) c.fallback_rate = jc.at("fallback_rate").get<double>();
      r.cells.push_back(std::move(c));
    }
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, fmt::format("malformed result JSON: {}", ex.what()));
  } catch (const std::logic_error& ex) {
    throw Error(Errc::parse_error, fmt::format("malformed result JSON: {}", ex.what()));
  }
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "density,trials,failures,mean_degree,std_error\n";
  for (const SweepPoint& p : points) {
    // A density where every trial failed is a gap: no mean to report.
    out += fmt::format("{},{},{},{},{}\n", p.density, p.trials, p.failures, p.gap() ? "" : fixed(p.mean_degree),
                       p.gap() ? "" : fixed(p.std_error));
  }
  return out;
}

nlohmann::ordered_json sweep_json(const std::vector<SweepPoint>& points) {
  ojson out = ojson::array();
  for (const SweepPoint& p : points) {
    out.push_back({{"density", p.density},
                   {"trials", p.trials},
                   {"failures", p.failures},
                   {"mean_degree", p.gap() ? ojson(nullptr) : ojson(p.mean_degree)},
                   {"std_error", p.gap() ? ojson(nullptr) : ojson(p.std_error)}});
  }
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write {}", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::io_error, fmt::format("write to {} failed", path.string()));
}

void emit_results(const ExperimentResult& result, OutputFormat format, const std::filesystem::path& path) {
  write_text(path, format == OutputFormat::csv ? results_csv(result) : results_json(result).dump(2) + "\n");
}

}  // namespace onionpath
