#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "onionpath/latency_graph.hpp"
#include "onionpath/metrics.hpp"
#include "onionpath/paths.hpp"
#include "onionpath/types.hpp"

namespace onionpath {

struct Node {
  NodeId id{};
  std::string country;    // ISO 3166 alpha-2, or "Others"
  double bandwidth = 0.0;  // KB/s

  friend bool operator==(const Node&, const Node&) = default;
};

// Throws if bandwidth <= 0 or the country is empty.
void validate_node(const Node& node);

enum class Strategy { rnd, geo, bw, grp };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

enum class Provenance { strategy, graph_path, random_fallback };

std::string_view to_string(Provenance p);

/// <s, e, r_1, ..., x> with links (s,e), (e,r_1), ..., (r_{delta-2}, x).
struct Circuit {
  NodeId client{};
  std::vector<NodeId> relays;
  std::vector<std::pair<NodeId, NodeId>> links;
  Provenance provenance = Provenance::strategy;

  std::size_t length() const { return relays.size(); }
  NodeId entry() const { return relays.front(); }
  NodeId exit() const { return relays.back(); }

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

Circuit make_circuit(NodeId client, std::vector<NodeId> relays, Provenance provenance = Provenance::strategy);

// Relays distinct, client excluded, |links| == |relays|, links chained.
bool is_valid_circuit(const Circuit& circuit);

nlohmann::json to_json(const Circuit& circuit);
Circuit circuit_from_json(const nlohmann::json& j);

struct StrategyConfig {
  std::size_t delta = 3;
  std::string home_country = "US";
  std::size_t k = 300;
  std::size_t max_iter = 5;
  GrpDegreeOptions degree{};
};

void validate(const StrategyConfig& config);

Circuit select_random(std::span<const Node> nodes, NodeId client, std::size_t delta, Rng& rng);

// Uniform selection restricted to relays in `home_country`.
Circuit select_geo(std::span<const Node> nodes, NodeId client, std::size_t delta, std::string_view home_country,
                   Rng& rng);

/// Inverse-CDF selection over the bandwidth-sorted cumulative distribution.
/// A draw that lands on an already chosen relay is discarded and redrawn.
Circuit select_bw(std::span<const Node> nodes, NodeId client, std::size_t delta, Rng& rng);

/// Latency-graph selection: up to `max_iter` times pick a random exit, ask
/// kpaths for up to `k` paths of `delta` edges from the client, keep the one
/// with the lowest summed latency. Falls back to a uniform circuit.
Circuit select_grp(const LatencyGraph& graph, NodeId client, std::size_t delta, std::size_t k, std::size_t max_iter,
                   Rng& rng);
// Same, over a prebuilt weighted view of the latency graph.
Circuit select_grp(const UndirectedGraph& graph, NodeId client, std::size_t delta, std::size_t k,
                   std::size_t max_iter, Rng& rng);

// Inputs for strategy_pmf; only the fields a strategy needs must be set.
struct StrategyContext {
  std::span<const Node> nodes;
  std::string home_country;
  const AnalyticalGraph* graph = nullptr;
  std::size_t lambda = 2;
  GrpDegreeOptions degree{};
};

// Analytical single-node selection pmf of a strategy.
Pmf strategy_pmf(Strategy strategy, const StrategyContext& context);

// anonymity_degree(strategy_pmf(...)) over the matching population.
AnonymityDegree strategy_degree(Strategy strategy, const StrategyContext& context);

}  // namespace onionpath
