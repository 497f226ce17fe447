#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "onionpath/paths.hpp"
#include "onionpath/types.hpp"

namespace onionpath {

// Latency in milliseconds, or nullopt when the pair is disconnected.
using Latency = std::optional<double>;

struct EdgeLabel {
  Latency latency;
  Tick measured_at = 0;

  friend bool operator==(const EdgeLabel&, const EdgeLabel&) = default;
};

// c_t: latency of an edge at a given instant.
using ProbeOracle = std::function<Latency(Edge, Tick)>;

// EWMA smoothing factor (tp - t0) / (tq - t0).
double alpha(Tick t0, Tick tp, Tick tq);

/// Client-side view of the overlay: every relay plus the client, an edge set
/// of pairs currently believed connected, and one label per measured pair.
///
/// Labels of pairs that dropped out of the edge set are retained.
class LatencyGraph {
 public:
  static LatencyGraph init(std::span<const NodeId> vertices, NodeId client, Tick t0);

  const std::vector<NodeId>& vertices() const { return vertices_; }
  NodeId client() const { return client_; }
  Tick start_time() const { return t0_; }
  const std::set<Edge>& edges() const { return edges_; }
  bool has_edge(Edge e) const { return edges_.contains(e); }
  bool contains(NodeId v) const;

  // Stored label, or (undefined, t0) for a pair never measured.
  EdgeLabel label(Edge e) const;
  const std::map<Edge, EdgeLabel>& measured_labels() const { return labels_; }

  /// Applies one measurement taken at `tq`:
  ///  - undefined: the edge leaves E, its label is kept;
  ///  - first defined value: label (l_q, tq), edge joins E;
  ///  - otherwise label (alpha * l_p + (1 - alpha) * l_q, tq), edge in E.
  void update_label(Edge e, Latency measured, Tick tq);

  // The full graph G with current label latencies as edge weights.
  UndirectedGraph weighted_graph() const;

  double density() const;

  nlohmann::json to_json() const;
  static LatencyGraph from_json(const nlohmann::json& j);

  friend bool operator==(const LatencyGraph&, const LatencyGraph&) = default;

 private:
  LatencyGraph() = default;
  void check_edge(Edge e) const;

  std::vector<NodeId> vertices_;
  NodeId client_{};
  Tick t0_ = 0;
  std::set<Edge> edges_;
  std::map<Edge, EdgeLabel> labels_;
};

// Probes `probes_per_round` uniformly drawn pairs (with replacement) of
// distinct vertices at time `tq`.
void measurement_round(LatencyGraph& graph, const ProbeOracle& oracle, std::size_t probes_per_round, Tick tq,
                       Rng& rng);

// Latency graph minus the client vertex and its incident edges.
AnalyticalGraph analytical_graph(const LatencyGraph& graph);

/// One writer, many readers. Readers receive full copies taken under a
/// shared lock, so a snapshot never mixes two rounds.
class SharedLatencyGraph {
 public:
  explicit SharedLatencyGraph(LatencyGraph graph) : graph_(std::move(graph)) {}

  LatencyGraph snapshot() const {
    std::shared_lock lock(mutex_);
    return graph_;
  }

  template <typename F>
  void modify(F&& f) {
    std::unique_lock lock(mutex_);
    f(graph_);
  }

 private:
  mutable std::shared_mutex mutex_;
  LatencyGraph graph_;
};

/// Background latency computation process. `step()` runs one round
/// synchronously; `start()` runs rounds on a worker thread every `interval`.
class LatencyMonitor {
 public:
  LatencyMonitor(LatencyGraph graph, ProbeOracle oracle, std::size_t probes_per_round, std::uint64_t seed);
  ~LatencyMonitor();

  LatencyMonitor(const LatencyMonitor&) = delete;
  LatencyMonitor& operator=(const LatencyMonitor&) = delete;

  void step();
  void run_rounds(std::size_t rounds);

  void start(std::chrono::milliseconds interval);
  void stop();
  bool running() const { return worker_.joinable(); }

  LatencyGraph snapshot() const { return shared_.snapshot(); }
  Tick now() const;

 private:
  SharedLatencyGraph shared_;
  ProbeOracle oracle_;
  std::size_t probes_per_round_;
  Rng rng_;
  Tick tq_;
  std::vector<NodeId> vertices_;  // fixed for the graph's lifetime
  mutable std::mutex step_mutex_;
  std::jthread worker_;
};

}  // namespace onionpath
