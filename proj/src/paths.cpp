#include "onionpath/paths.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "onionpath/error.hpp"

namespace onionpath {

namespace {

constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

void check_weight(double latency_ms) {
  if (!std::isfinite(latency_ms) || latency_ms < 0.0) {
    throw Error(Errc::invalid_argument, fmt::format("edge weight must be finite and >= 0, got {}", latency_ms));
  }
}

// BFS hop distance from every vertex to `target`.
std::vector<std::size_t> hop_distances(const UndirectedGraph& g, std::size_t target) {
  std::vector<std::size_t> dist(g.vertex_count(), kUnreachable);
  std::deque<std::size_t> queue{target};
  dist[target] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t w : g.neighbors(u)) {
      if (dist[w] == kUnreachable) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

void check_exact_limits(const UndirectedGraph& g, std::size_t length, const ExactLimits& limits) {
  if (g.vertex_count() > limits.max_vertices || length > limits.max_length) {
    throw Error(Errc::instance_too_large,
                fmt::format("instance too large for exact enumeration ({} vertices, length {}; limits {} / {}); "
                            "use lb_estimate",
                            g.vertex_count(), length, limits.max_vertices, limits.max_length));
  }
}

void check_length(std::size_t length) {
  if (length == 0) throw Error(Errc::invalid_argument, "path length must be at least one edge");
}

struct KPathsSearch {
  const UndirectedGraph& graph;
  std::size_t target;
  std::size_t length;
  std::size_t k;
  Rng& rng;
  std::vector<std::size_t> dist;
  std::vector<char> on_path;
  std::vector<std::size_t> current;
  std::vector<PathOfLength> found;

  void extend() {
    if (found.size() >= k) return;
    const std::size_t edges_so_far = current.size() - 1;
    if (edges_so_far >= length) return;
    const std::size_t new_len = edges_so_far + 1;
    const std::size_t remaining = length - new_len;

    std::vector<std::size_t> candidates;
    for (std::size_t w : graph.neighbors(current.back())) {
      if (on_path[w] || dist[w] > remaining) continue;
      candidates.push_back(w);
    }
    shuffle_in_place(candidates, rng);

    for (std::size_t w : candidates) {
      if (w == target) {
        if (new_len < length) continue;
        PathOfLength p;
        p.vertices.reserve(current.size() + 1);
        for (std::size_t idx : current) p.vertices.push_back(graph.vertex_at(idx));
        p.vertices.push_back(graph.vertex_at(w));
        found.push_back(std::move(p));
        break;
      }
      if (new_len >= length) continue;
      current.push_back(w);
      on_path[w] = 1;
      extend();
      on_path[w] = 0;
      current.pop_back();
      if (found.size() >= k) return;
    }
  }
};

// Visits every simple path with `length` edges that starts at `source`;
// `visit` receives the vertex indices of the path.
template <typename Visit>
void enumerate_from(const UndirectedGraph& g, std::size_t source, std::size_t length,
                    std::vector<char>& on_path, std::vector<std::size_t>& current, Visit&& visit) {
  current.assign(1, source);
  on_path[source] = 1;
  auto rec = [&](auto&& self) -> void {
    if (current.size() - 1 == length) {
      visit(current);
      return;
    }
    for (std::size_t w : g.neighbors(current.back())) {
      if (on_path[w]) continue;
      on_path[w] = 1;
      current.push_back(w);
      self(self);
      current.pop_back();
      on_path[w] = 0;
    }
  };
  rec(rec);
  on_path[source] = 0;
}

BetweennessTable finish_table(const UndirectedGraph& g, std::size_t length, std::vector<double> sigma,
                              double total, bool estimated) {
  if (!(total > 0.0)) {
    throw Error(Errc::lb_undefined, fmt::format("LB undefined: no simple path of length {} in the graph", length));
  }
  double sigma_sum = 0.0;
  for (double s : sigma) sigma_sum += s;
  BetweennessTable table;
  table.length_in_edges = length;
  table.total_paths = total;
  table.estimated = estimated;
  table.rows.reserve(g.vertex_count());
  for (std::size_t i = 0; i < g.vertex_count(); ++i) {
    table.rows.push_back({g.vertex_at(i), sigma[i], sigma[i] / total, sigma[i] / sigma_sum});
  }
  return table;
}

__extension__ typedef unsigned __int128 u128;

u128 checked_pow(std::uint64_t base, std::uint64_t exp) {
  u128 result = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && result > (u128{1} << 100) / base) {
      throw Error(Errc::overflow, fmt::format("{}^{} exceeds the supported range", base, exp));
    }
    result *= base;
  }
  return result;
}

std::uint64_t narrow(u128 v) {
  if (v > std::numeric_limits<std::uint64_t>::max()) throw Error(Errc::overflow, "walk count exceeds 64 bits");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

UndirectedGraph::UndirectedGraph(std::vector<NodeId> vertices, std::span<const WeightedEdge> edges) {
  std::sort(vertices.begin(), vertices.end(), [](NodeId l, NodeId r) { return raw(l) < raw(r); });
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  vertices_ = std::move(vertices);
  adjacency_.assign(vertices_.size(), {});
  for (const WeightedEdge& e : edges) add_edge(e.a, e.b, e.latency_ms);
}

bool UndirectedGraph::contains(NodeId v) const {
  return std::binary_search(vertices_.begin(), vertices_.end(), v,
                            [](NodeId l, NodeId r) { return raw(l) < raw(r); });
}

std::size_t UndirectedGraph::index_of(NodeId v) const {
  auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v,
                             [](NodeId l, NodeId r) { return raw(l) < raw(r); });
  if (it == vertices_.end() || *it != v) {
    throw Error(Errc::unknown_vertex, fmt::format("vertex {} is not in the graph", raw(v)));
  }
  return static_cast<std::size_t>(it - vertices_.begin());
}

void UndirectedGraph::add_edge(NodeId a, NodeId b, double latency_ms) {
  if (a == b) throw Error(Errc::invalid_argument, fmt::format("self-edge on vertex {}", raw(a)));
  check_weight(latency_ms);
  const std::size_t ia = index_of(a);
  const std::size_t ib = index_of(b);
  auto [it, inserted] = weights_.insert_or_assign(Edge{a, b}, latency_ms);
  if (!inserted) return;
  auto insert_sorted = [](std::vector<std::size_t>& adj, std::size_t v) {
    adj.insert(std::lower_bound(adj.begin(), adj.end(), v), v);
  };
  insert_sorted(adjacency_[ia], ib);
  insert_sorted(adjacency_[ib], ia);
}

void UndirectedGraph::remove_edge(NodeId a, NodeId b) {
  if (weights_.erase(Edge{a, b}) == 0) return;
  const std::size_t ia = index_of(a);
  const std::size_t ib = index_of(b);
  std::erase(adjacency_[ia], ib);
  std::erase(adjacency_[ib], ia);
}

bool UndirectedGraph::has_edge(NodeId a, NodeId b) const {
  return a != b && weights_.contains(Edge{a, b});
}

std::optional<double> UndirectedGraph::weight(NodeId a, NodeId b) const {
  if (a == b) return std::nullopt;
  auto it = weights_.find(Edge{a, b});
  if (it == weights_.end()) return std::nullopt;
  return it->second;
}

std::vector<WeightedEdge> UndirectedGraph::edges() const {
  std::vector<WeightedEdge> out;
  out.reserve(weights_.size());
  for (const auto& [e, w] : weights_) out.push_back({e.a, e.b, w});
  return out;
}

double UndirectedGraph::density() const {
  const double n = static_cast<double>(vertices_.size());
  if (n < 2) return 0.0;
  return 2.0 * static_cast<double>(weights_.size()) / (n * (n - 1.0));
}

UndirectedGraph make_complete_graph(std::size_t n, double latency_ms) {
  std::vector<NodeId> vs;
  for (std::size_t i = 0; i < n; ++i) vs.push_back(node_id(static_cast<std::uint32_t>(i)));
  UndirectedGraph g(vs);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) g.add_edge(vs[i], vs[j], latency_ms);
  }
  return g;
}

UndirectedGraph make_random_graph(std::size_t n, double density, Rng& rng) {
  if (!(density >= 0.0 && density <= 1.0)) {
    throw Error(Errc::invalid_argument, fmt::format("density must lie in [0,1], got {}", density));
  }
  std::vector<NodeId> vs;
  for (std::size_t i = 0; i < n; ++i) vs.push_back(node_id(static_cast<std::uint32_t>(i)));
  std::vector<Edge> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(vs[i], vs[j]);
  }
  const auto m = static_cast<std::size_t>(std::llround(density * static_cast<double>(pairs.size())));
  shuffle_in_place(pairs, rng);
  UndirectedGraph g(vs);
  for (std::size_t i = 0; i < m; ++i) g.add_edge(pairs[i].a, pairs[i].b, 1.0);
  return g;
}

bool is_simple_path(const UndirectedGraph& graph, const PathOfLength& path) {
  if (path.vertices.size() < 2) return false;
  std::vector<std::uint32_t> ids;
  for (NodeId v : path.vertices) {
    if (!graph.contains(v)) return false;
    ids.push_back(raw(v));
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) return false;
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    if (!graph.has_edge(path.vertices[i], path.vertices[i + 1])) return false;
  }
  return true;
}

double path_weight(const UndirectedGraph& graph, const PathOfLength& path) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    auto w = graph.weight(path.vertices[i], path.vertices[i + 1]);
    if (!w) {
      throw Error(Errc::invalid_argument,
                  fmt::format("({}, {}) is not an edge", raw(path.vertices[i]), raw(path.vertices[i + 1])));
    }
    total += *w;
  }
  return total;
}

std::vector<PathOfLength> kpaths(const UndirectedGraph& graph, NodeId source, NodeId target,
                                 std::size_t length_in_edges, std::size_t k, Rng& rng) {
  check_length(length_in_edges);
  if (source == target) throw Error(Errc::invalid_argument, "kpaths needs distinct source and target");
  if (k == 0) throw Error(Errc::invalid_argument, "k must be at least 1");
  const std::size_t s = graph.index_of(source);
  const std::size_t t = graph.index_of(target);

  KPathsSearch search{graph, t, length_in_edges, k, rng, hop_distances(graph, t),
                      std::vector<char>(graph.vertex_count(), 0), {s}, {}};
  if (search.dist[s] > length_in_edges) return {};
  search.on_path[s] = 1;
  search.extend();
  return std::move(search.found);
}

std::uint64_t count_paths(const UndirectedGraph& graph, NodeId source, NodeId target,
                          std::size_t length_in_edges, const ExactLimits& limits) {
  check_length(length_in_edges);
  if (source == target) throw Error(Errc::invalid_argument, "count_paths needs distinct source and target");
  check_exact_limits(graph, length_in_edges, limits);
  const std::size_t s = graph.index_of(source);
  const std::size_t t = graph.index_of(target);
  std::vector<char> on_path(graph.vertex_count(), 0);
  std::vector<std::size_t> current;
  std::uint64_t count = 0;
  enumerate_from(graph, s, length_in_edges, on_path, current,
                 [&](const std::vector<std::size_t>& p) { count += (p.back() == t); });
  return count;
}

BetweennessTable betweenness_table(const UndirectedGraph& graph, std::size_t length_in_edges,
                                   const ExactLimits& limits) {
  check_length(length_in_edges);
  check_exact_limits(graph, length_in_edges, limits);
  const std::size_t n = graph.vertex_count();
  std::vector<std::uint64_t> through(n, 0);
  std::uint64_t total = 0;
  std::vector<char> on_path(n, 0);
  std::vector<std::size_t> current;
  for (std::size_t s = 0; s < n; ++s) {
    enumerate_from(graph, s, length_in_edges, on_path, current, [&](const std::vector<std::size_t>& p) {
      ++total;
      for (std::size_t v : p) ++through[v];
    });
  }
  std::vector<double> sigma(through.begin(), through.end());
  return finish_table(graph, length_in_edges, std::move(sigma), static_cast<double>(total), false);
}

BetweennessTable lb_estimate(const UndirectedGraph& graph, std::size_t length_in_edges, std::size_t samples,
                             Rng& rng) {
  check_length(length_in_edges);
  if (samples == 0) throw Error(Errc::invalid_argument, "lb_estimate needs at least one sample");
  const std::size_t n = graph.vertex_count();
  if (n < 2) throw Error(Errc::lb_undefined, "LB undefined: graph has fewer than two vertices");

  std::vector<double> sigma(n, 0.0);
  double total = 0.0;
  std::vector<char> on_path(n, 0);
  std::vector<std::size_t> walk;
  std::vector<std::size_t> choices;
  for (std::size_t sample = 0; sample < samples; ++sample) {
    walk.assign(1, static_cast<std::size_t>(uniform_below(rng, n)));
    on_path[walk[0]] = 1;
    double weight = 1.0;
    while (walk.size() - 1 < length_in_edges) {
      choices.clear();
      for (std::size_t w : graph.neighbors(walk.back())) {
        if (!on_path[w]) choices.push_back(w);
      }
      if (choices.empty()) {
        weight = 0.0;
        break;
      }
      weight *= static_cast<double>(choices.size());
      const std::size_t next = choices[uniform_below(rng, choices.size())];
      on_path[next] = 1;
      walk.push_back(next);
    }
    if (weight > 0.0) {
      total += weight;
      for (std::size_t v : walk) sigma[v] += weight;
    }
    for (std::size_t v : walk) on_path[v] = 0;
  }
  // Scale the per-start-vertex averages back to sums over all start vertices.
  const double scale = static_cast<double>(n) / static_cast<double>(samples);
  for (double& s : sigma) s *= scale;
  return finish_table(graph, length_in_edges, std::move(sigma), total * scale, true);
}

std::uint64_t walk_offdiag(std::uint64_t n, std::uint64_t lambda) {
  if (n < 2) throw Error(Errc::invalid_argument, "walk_offdiag needs n >= 2");
  if (lambda == 0) throw Error(Errc::invalid_argument, "walk length must be positive");
  const u128 p = checked_pow(n - 1, lambda);
  const u128 numerator = (lambda % 2 == 0) ? p - 1 : p + 1;
  return narrow(numerator / n);
}

std::uint64_t walk_diag(std::uint64_t n, std::uint64_t lambda) {
  if (n < 1) throw Error(Errc::invalid_argument, "walk_diag needs n >= 1");
  if (lambda == 0) throw Error(Errc::invalid_argument, "walk length must be positive");
  const u128 p = checked_pow(n - 1, lambda);
  const u128 numerator = (lambda % 2 == 0) ? p + (n - 1) : p - (n - 1);
  return narrow(numerator / n);
}

std::uint64_t total_walks(std::uint64_t n, std::uint64_t lambda) {
  if (n < 2) throw Error(Errc::invalid_argument, "total_walks needs n >= 2");
  if (lambda == 0) throw Error(Errc::invalid_argument, "walk length must be positive");
  const u128 p = checked_pow(n - 1, lambda);
  const u128 inner = (lambda % 2 == 0) ? p - 1 : p + 1;
  return narrow(u128{n - 1} * inner);
}

std::string to_csv(const BetweennessTable& table) {
  std::string out = "node_id,sigma,kp_b,lb,estimated\n";
  for (const BetweennessRow& row : table.rows) {
    out += fmt::format("{},{},{},{},{}\n", raw(row.node), row.sigma, row.kp_b, row.lb,
                       table.estimated ? "true" : "false");
  }
  return out;
}

}  // namespace onionpath
