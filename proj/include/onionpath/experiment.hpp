#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "onionpath/latency_graph.hpp"
#include "onionpath/metrics.hpp"
#include "onionpath/simnet.hpp"
#include "onionpath/strategies.hpp"

namespace onionpath {

struct BandwidthSource {
  std::size_t sample_size = 3071;
  double median_kbps = 400.0;
  double sigma = 0.5;
  std::vector<double> values;  // when non-empty, used instead of the synthetic sample
};

struct ExperimentPlan {
  std::vector<Strategy> strategies{Strategy::rnd, Strategy::geo, Strategy::bw, Strategy::grp};
  std::vector<double> page_sizes_kb{50.0, 150.0, 320.0};
  std::vector<std::size_t> circuit_lengths{3, 4, 5, 6};
  std::size_t repetitions = 100;
  std::size_t warmup_rounds = 2400;
  std::uint64_t seed = 20130601;
  std::string home_country = "US";  // also the client's country

  // Latency-graph strategy parameters.
  std::size_t round_interval_ms = 5000;  // wall-clock spacing of rounds in live mode only
  std::size_t probes_per_round = 3;
  std::size_t k = 300;
  std::size_t max_iter = 5;
  std::size_t degree_samples = 200000;

  std::size_t threads = 1;
};

void validate(const ExperimentPlan& plan);

struct SimulationConfig {
  std::vector<std::pair<std::string, std::size_t>> countries = default_countries();
  std::size_t total = 100;
  std::size_t cluster_count = 100;
  BandwidthSource bandwidth{};
  LatencyModel latency{};
  TransferModel transfer{};  // page_kb is overridden per cell
  ExperimentPlan plan{};
};

SimulationConfig default_config();
SimulationConfig load_config(const std::filesystem::path& path);
SimulationConfig config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const SimulationConfig& config);

// Name of the environment variable that overrides the configured seed.
inline constexpr std::string_view kSeedEnvVar = "ONIONPATH_SEED";

/// Everything derived from the config before any circuit is built: relays,
/// client, simulated network and the latency graph after warm-up.
struct World {
  std::vector<Node> relays;
  Node client;
  SimulatedNetwork network;
  LatencyGraph graph;
};

World build_world(const SimulationConfig& config);

struct DegreeEntry {
  std::optional<AnonymityDegree> degree;
  std::string error;
};

struct DegreeReport {
  DegreeEntry rnd;
  DegreeEntry geo;
  DegreeEntry bw;
  std::map<std::size_t, DegreeEntry> grp;  // keyed by circuit length, lambda = delta - 1
};

DegreeReport degree_report(const ExperimentPlan& plan, const std::vector<Node>& population,
                           const LatencyGraph& graph);

struct CellResult {
  Strategy strategy = Strategy::rnd;
  double page_kb = 0.0;
  std::size_t delta = 0;
  std::vector<double> samples;  // seconds, one per repetition
  double min_s = 0.0;
  double max_s = 0.0;
  double avg_s = 0.0;
  double std_s = 0.0;  // population standard deviation
  std::optional<double> degree;
  bool degree_estimated = false;
  std::optional<double> fallback_rate;  // grp only
  std::string error;                    // non-empty when the cell aborted
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  DegreeReport degrees;
  std::size_t warmup_rounds = 0;
  std::size_t warmup_edges = 0;
  double warmup_density = 0.0;

  bool ok() const;
};

struct SampleStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

SampleStats summarize(const std::vector<double>& samples);

ExperimentResult run_experiment(const SimulationConfig& config);

struct SweepPoint {
  double density = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;  // trials whose graph had no lambda-path
  double mean_degree = 0.0;
  double std_error = 0.0;
  bool gap() const { return failures == trials; }
};

/// Mean exact d_grp over `trials` random graphs per density.
std::vector<SweepPoint> density_sweep(std::size_t n, std::size_t lambda, const std::vector<double>& densities,
                                      std::size_t trials, Rng& rng);

enum class OutputFormat { csv, json };
OutputFormat parse_format(std::string_view name);

std::string results_csv(const ExperimentResult& result);
// One row per repetition: strategy,page_kb,delta,repetition,seconds.
std::string samples_csv(const ExperimentResult& result);
nlohmann::ordered_json results_json(const ExperimentResult& result);
ExperimentResult results_from_json(const nlohmann::ordered_json& j);

std::string sweep_csv(const std::vector<SweepPoint>& points);
nlohmann::ordered_json sweep_json(const std::vector<SweepPoint>& points);
nlohmann::ordered_json degrees_json(const DegreeReport& report);

void emit_results(const ExperimentResult& result, OutputFormat format, const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace onionpath
