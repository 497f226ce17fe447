#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "onionpath/latency_graph.hpp"
#include "onionpath/strategies.hpp"
#include "onionpath/types.hpp"

namespace onionpath {

struct PopulationSpec {
  // Ordered as listed; node ids are handed out in this order.
  std::vector<std::pair<std::string, std::size_t>> country_counts;
  std::size_t total = 0;
  std::vector<double> bandwidth_sample;  // KB/s values to cluster
  std::size_t cluster_count = 1;
};

void validate(const PopulationSpec& spec);

// Relay distribution per country of the 100-relay testbed.
std::vector<std::pair<std::string, std::size_t>> default_countries();

// Log-normal stand-in for directory bandwidth data.
std::vector<double> synthetic_bandwidth_sample(std::size_t size, double median_kbps, double sigma, Rng& rng);

struct KMeansResult {
  std::vector<double> centroids;          // sorted ascending
  std::vector<std::size_t> assignment;    // cluster index per input value (into `centroids`)
  std::vector<double> objective_history;  // within-cluster sum of squares after each assignment step
  std::size_t rounds = 0;
};

/// Lloyd's algorithm on 1-D data. Seeds are distinct sampled values; each
/// value joins its nearest centroid (lower index on ties); stops at an
/// assignment fixpoint or after `max_rounds`.
KMeansResult kmeans_detailed(std::span<const double> values, std::size_t cluster_count, std::size_t max_rounds,
                             Rng& rng);

std::vector<double> kmeans(std::span<const double> values, std::size_t cluster_count, std::size_t max_rounds,
                           Rng& rng);

/// Relays with the requested country counts and bandwidths drawn uniformly from
/// the k-means centroids of the bandwidth sample.
std::vector<Node> generate_population(const PopulationSpec& spec, Rng& rng);

struct LatencyModel {
  double intra_country_ms = 20.0;
  double inter_country_ms = 150.0;
  double jitter_ms = 8.0;        // mean of the exponential jitter
  double down_probability = 0.02;
  double pair_spread = 0.5;      // stable pair offset lies in [0, spread * base)
};

void validate(const LatencyModel& model);

/// Simulated overlay answering latency probes. All randomness is derived
/// from (seed, pair, time, nonce), so results do not depend on call order.
class SimulatedNetwork {
 public:
  SimulatedNetwork(LatencyModel model, std::map<NodeId, std::string> countries, std::uint64_t seed);

  const LatencyModel& model() const { return model_; }
  const std::string& country(NodeId id) const;

  double base_latency(NodeId a, NodeId b) const;
  double pair_offset(NodeId a, NodeId b) const;
  // base + offset + exponential jitter; never undefined.
  double sample_latency(NodeId a, NodeId b, Tick t, std::uint64_t nonce = 0) const;
  // Undefined with probability down_probability, otherwise sample_latency.
  Latency probe(NodeId a, NodeId b, Tick t, std::uint64_t nonce = 0) const;

  ProbeOracle oracle() const;

 private:
  LatencyModel model_;
  std::map<NodeId, std::string> countries_;
  std::uint64_t seed_;
};

struct TransferModel {
  double handshake_per_link = 8.0;  // round trips charged per link latency
  double processing_ms = 40.0;      // per relay
  double page_kb = 320.0;
};

void validate(const TransferModel& model);

/// Seconds to fetch one page through `circuit`:
///   sum(latency) * handshake / 1000 + delta * processing / 1000 + page / min(bandwidth).
double transfer_time(const TransferModel& model, const Circuit& circuit, std::span<const double> link_latencies_ms,
                     std::span<const double> bandwidths_kbps);

}  // namespace onionpath
