#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "onionpath/types.hpp"

namespace onionpath {

struct WeightedEdge {
  NodeId a{};
  NodeId b{};
  double latency_ms = 0.0;
};

/// Undirected graph with non-negative edge weights (latency in ms).
///
/// Vertices are kept sorted by id and addressed internally by dense index;
/// adjacency lists are sorted by index, so iteration order is independent of
/// insertion order.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  UndirectedGraph(std::vector<NodeId> vertices, std::span<const WeightedEdge> edges = {});

  void add_edge(NodeId a, NodeId b, double latency_ms = 0.0);
  void remove_edge(NodeId a, NodeId b);

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return weights_.size(); }
  const std::vector<NodeId>& vertices() const { return vertices_; }
  bool contains(NodeId v) const;
  std::size_t index_of(NodeId v) const;  // throws unknown_vertex
  NodeId vertex_at(std::size_t index) const { return vertices_[index]; }
  const std::vector<std::size_t>& neighbors(std::size_t index) const { return adjacency_[index]; }

  bool has_edge(NodeId a, NodeId b) const;
  std::optional<double> weight(NodeId a, NodeId b) const;
  std::vector<WeightedEdge> edges() const;

  // 2m / (n(n-1)); 0 for graphs with fewer than two vertices.
  double density() const;

 private:
  std::vector<NodeId> vertices_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::map<Edge, double> weights_;
};

// The graph the adversary can reconstruct: latency graph minus the client.
using AnalyticalGraph = UndirectedGraph;

UndirectedGraph make_complete_graph(std::size_t n, double latency_ms = 1.0);

// G(n, m) random graph with exactly round(density * n(n-1)/2) edges.
UndirectedGraph make_random_graph(std::size_t n, double density, Rng& rng);

/// Simple path measured in edges: `vertices.size() == length_in_edges() + 1`.
struct PathOfLength {
  std::vector<NodeId> vertices;

  std::size_t length_in_edges() const { return vertices.empty() ? 0 : vertices.size() - 1; }
  friend bool operator==(const PathOfLength&, const PathOfLength&) = default;
};

// Consecutive vertices adjacent, all vertices distinct.
bool is_simple_path(const UndirectedGraph& graph, const PathOfLength& path);

double path_weight(const UndirectedGraph& graph, const PathOfLength& path);

/// Randomized depth-first search for up to `k` simple paths with exactly
/// `length_in_edges` edges from `source` to `target`.
///
/// Adjacency lists are shuffled with `rng` at every expansion; the target is
/// only accepted at the final hop. Returns an empty list when none exist.
std::vector<PathOfLength> kpaths(const UndirectedGraph& graph, NodeId source, NodeId target,
                                 std::size_t length_in_edges, std::size_t k, Rng& rng);

struct ExactLimits {
  std::size_t max_vertices = 20;
  std::size_t max_length = 6;
};

// Exact number of simple paths of the given edge length between two vertices.
std::uint64_t count_paths(const UndirectedGraph& graph, NodeId source, NodeId target,
                          std::size_t length_in_edges, const ExactLimits& limits = {});

struct BetweennessRow {
  NodeId node{};
  double sigma = 0.0;  // paths (over all ordered pairs) that contain the node
  double kp_b = 0.0;   // sigma / total_paths
  double lb = 0.0;     // sigma / sum of all sigma
};

struct BetweennessTable {
  std::size_t length_in_edges = 0;
  double total_paths = 0.0;  // sum over ordered pairs of sigma_st
  bool estimated = false;
  std::vector<BetweennessRow> rows;  // one per vertex, in vertex order
};

/// Exact lambda-betweenness over all ordered vertex pairs. A path counts for
/// every vertex on it, endpoints included.
BetweennessTable betweenness_table(const UndirectedGraph& graph, std::size_t length_in_edges,
                                   const ExactLimits& limits = {});

/// Monte Carlo version of betweenness_table for graphs past the exact limits.
///
/// Each sample grows one self-avoiding walk from a uniformly chosen start
/// vertex, picking uniformly among unvisited neighbours, and weights a
/// completed walk by the product of the branching factors seen on the way.
BetweennessTable lb_estimate(const UndirectedGraph& graph, std::size_t length_in_edges,
                             std::size_t samples, Rng& rng);

// Walks of length lambda in K_n between two fixed distinct vertices.
std::uint64_t walk_offdiag(std::uint64_t n, std::uint64_t lambda);
// Closed walks of length lambda in K_n from a vertex back to itself.
std::uint64_t walk_diag(std::uint64_t n, std::uint64_t lambda);
// Walks of length lambda in K_n summed over all ordered distinct pairs.
std::uint64_t total_walks(std::uint64_t n, std::uint64_t lambda);

// CSV with header `node_id,sigma,kp_b,lb,estimated`.
std::string to_csv(const BetweennessTable& table);

}  // namespace onionpath
