#include "onionpath/strategies.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "onionpath/error.hpp"

namespace onionpath {

namespace {

void check_delta(std::size_t delta) {
  if (delta < 2) throw Error(Errc::invalid_argument, fmt::format("circuit length must be >= 2, got {}", delta));
}

void check_relays(std::span<const Node> nodes, NodeId client) {
  std::set<std::uint32_t> seen;
  for (const Node& n : nodes) {
    validate_node(n);
    if (n.id == client) {
      throw Error(Errc::invalid_argument, fmt::format("client {} appears in the relay list", raw(client)));
    }
    if (!seen.insert(raw(n.id)).second) {
      throw Error(Errc::invalid_argument, fmt::format("duplicate relay id {}", raw(n.id)));
    }
  }
}

// Draw `delta` distinct ids uniformly: pick an index into the remaining
// candidates, take it, remove it.
std::vector<NodeId> draw_uniform(std::vector<NodeId> remaining, std::size_t delta, Rng& rng) {
  std::vector<NodeId> chosen;
  chosen.reserve(delta);
  for (std::size_t i = 0; i < delta; ++i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, remaining.size()));
    chosen.push_back(remaining[j]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return chosen;
}

}  // namespace

void validate_node(const Node& node) {
  if (!(node.bandwidth > 0.0) || !std::isfinite(node.bandwidth)) {
    throw Error(Errc::invalid_argument, fmt::format("node {} has bandwidth {}", raw(node.id), node.bandwidth));
  }
  if (node.country.empty()) throw Error(Errc::invalid_argument, fmt::format("node {} has no country", raw(node.id)));
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::rnd: return "rnd";
    case Strategy::geo: return "geo";
    case Strategy::bw: return "bw";
    case Strategy::grp: return "grp";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::rnd, Strategy::geo, Strategy::bw, Strategy::grp}) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::parse_error, fmt::format("unknown strategy '{}' (expected rnd|geo|bw|grp)", name));
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::strategy: return "strategy";
    case Provenance::graph_path: return "graph-path";
    case Provenance::random_fallback: return "random-fallback";
  }
  return "?";
}

Circuit make_circuit(NodeId client, std::vector<NodeId> relays, Provenance provenance) {
  Circuit c;
  c.client = client;
  c.relays = std::move(relays);
  c.provenance = provenance;
  NodeId prev = client;
  for (NodeId r : c.relays) {
    c.links.emplace_back(prev, r);
    prev = r;
  }
  return c;
}

bool is_valid_circuit(const Circuit& c) {
  if (c.relays.empty() || c.links.size() != c.relays.size()) return false;
  std::set<std::uint32_t> seen;
  for (NodeId r : c.relays) {
    if (r == c.client || !seen.insert(raw(r)).second) return false;
  }
  NodeId prev = c.client;
  for (std::size_t i = 0; i < c.relays.size(); ++i) {
    if (c.links[i] != std::pair{prev, c.relays[i]}) return false;
    prev = c.relays[i];
  }
  return true;
}

nlohmann::json to_json(const Circuit& c) {
  nlohmann::json relays = nlohmann::json::array();
  for (NodeId r : c.relays) relays.push_back(raw(r));
  return {{"client", raw(c.client)}, {"relays", std::move(relays)}, {"provenance", to_string(c.provenance)}};
}

Circuit circuit_from_json(const nlohmann::json& j) {
  try {
    std::vector<NodeId> relays;
    for (const auto& r : j.at("relays")) relays.push_back(node_id(r.get<std::uint32_t>()));
    const auto prov_name = j.at("provenance").get<std::string>();
    Provenance prov{};
    bool known = false;
    for (Provenance p : {Provenance::strategy, Provenance::graph_path, Provenance::random_fallback}) {
      if (to_string(p) == prov_name) {
        prov = p;
        known = true;
      }
    }
    if (!known) throw Error(Errc::parse_error, fmt::format("unknown provenance '{}'", prov_name));
    Circuit c = make_circuit(node_id(j.at("client").get<std::uint32_t>()), std::move(relays), prov);
    if (!is_valid_circuit(c)) throw Error(Errc::parse_error, "circuit JSON violates circuit invariants");
    return c;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, fmt::format("malformed circuit JSON: {}", ex.what()));
  }
}

void validate(const StrategyConfig& config) {
  check_delta(config.delta);
  if (config.k == 0) throw Error(Errc::invalid_argument, "k must be at least 1");
  if (config.max_iter == 0) throw Error(Errc::invalid_argument, "max_iter must be at least 1");
}

Circuit select_random(std::span<const Node> nodes, NodeId client, std::size_t delta, Rng& rng) {
  check_delta(delta);
  check_relays(nodes, client);
  if (nodes.size() < delta) {
    throw Error(Errc::insufficient_nodes,
                fmt::format("insufficient nodes: {} relays for a circuit of length {}", nodes.size(), delta));
  }
  std::vector<NodeId> ids;
  ids.reserve(nodes.size());
  for (const Node& n : nodes) ids.push_back(n.id);
  return make_circuit(client, draw_uniform(std::move(ids), delta, rng));
}

Circuit select_geo(std::span<const Node> nodes, NodeId client, std::size_t delta, std::string_view home_country,
                   Rng& rng) {
  check_delta(delta);
  check_relays(nodes, client);
  std::vector<Node> in_country;
  for (const Node& n : nodes) {
    if (n.country == home_country) in_country.push_back(n);
  }
  if (in_country.size() < delta) {
    throw Error(Errc::country_too_small, fmt::format("country too small: {} has {} relays, circuit needs {}",
                                                     home_country, in_country.size(), delta));
  }
  return select_random(in_country, client, delta, rng);
}

Circuit select_bw(std::span<const Node> nodes, NodeId client, std::size_t delta, Rng& rng) {
  check_delta(delta);
  check_relays(nodes, client);
  if (nodes.size() < delta) {
    throw Error(Errc::insufficient_nodes,
                fmt::format("insufficient nodes: {} relays for a circuit of length {}", nodes.size(), delta));
  }
  std::vector<const Node*> sorted;
  for (const Node& n : nodes) sorted.push_back(&n);
  std::sort(sorted.begin(), sorted.end(), [](const Node* l, const Node* r) {
    return l->bandwidth != r->bandwidth ? l->bandwidth < r->bandwidth : raw(l->id) < raw(r->id);
  });
  double total = 0.0;
  for (const Node* n : sorted) total += n->bandwidth;
  // cumulative[j] is the upper end of the interval owned by sorted[j].
  std::vector<double> cumulative;
  double running = 0.0;
  for (const Node* n : sorted) {
    running += n->bandwidth;
    cumulative.push_back(running / total);
  }

  std::vector<char> taken(sorted.size(), 0);
  std::vector<NodeId> relays;
  while (relays.size() < delta) {
    const double u = uniform01(rng);
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t j = it == cumulative.end() ? cumulative.size() - 1
                                           : static_cast<std::size_t>(it - cumulative.begin());
    if (taken[j]) continue;
    taken[j] = 1;
    relays.push_back(sorted[j]->id);
  }
  return make_circuit(client, std::move(relays));
}

Circuit select_grp(const UndirectedGraph& graph, NodeId client, std::size_t delta, std::size_t k,
                   std::size_t max_iter, Rng& rng) {
  check_delta(delta);
  if (k == 0 || max_iter == 0) throw Error(Errc::invalid_argument, "k and max_iter must be at least 1");
  if (!graph.contains(client)) {
    throw Error(Errc::unknown_vertex, fmt::format("client {} is not in the latency graph", raw(client)));
  }
  if (graph.vertex_count() < delta + 1) {
    throw Error(Errc::insufficient_nodes, fmt::format("insufficient nodes: {} vertices for a circuit of length {}",
                                                      graph.vertex_count(), delta));
  }
  std::vector<NodeId> relays;
  for (NodeId v : graph.vertices()) {
    if (v != client) relays.push_back(v);
  }

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    const NodeId exit = relays[uniform_below(rng, relays.size())];
    const std::vector<PathOfLength> paths = kpaths(graph, client, exit, delta, k, rng);
    if (paths.empty()) continue;
    const PathOfLength* best = nullptr;
    double best_weight = std::numeric_limits<double>::infinity();
    for (const PathOfLength& p : paths) {
      const double w = path_weight(graph, p);
      if (w < best_weight) {
        best_weight = w;
        best = &p;
      }
    }
    return make_circuit(client, std::vector<NodeId>(best->vertices.begin() + 1, best->vertices.end()),
                        Provenance::graph_path);
  }
  return make_circuit(client, draw_uniform(std::move(relays), delta, rng), Provenance::random_fallback);
}

Circuit select_grp(const LatencyGraph& graph, NodeId client, std::size_t delta, std::size_t k, std::size_t max_iter,
                   Rng& rng) {
  return select_grp(graph.weighted_graph(), client, delta, k, max_iter, rng);
}

Pmf strategy_pmf(Strategy strategy, const StrategyContext& ctx) {
  switch (strategy) {
    case Strategy::rnd: {
      std::vector<NodeId> ids;
      for (const Node& n : ctx.nodes) ids.push_back(n.id);
      return Pmf::uniform(ids);
    }
    case Strategy::geo: {
      std::size_t m = 0;
      for (const Node& n : ctx.nodes) m += (n.country == ctx.home_country);
      if (m == 0) throw Error(Errc::empty_country, fmt::format("empty country: no relay in {}", ctx.home_country));
      const double p = 1.0 / static_cast<double>(m);
      std::map<NodeId, double> probs;
      for (const Node& n : ctx.nodes) probs[n.id] = n.country == ctx.home_country ? p : 0.0;
      return Pmf(std::move(probs));
    }
    case Strategy::bw: {
      std::vector<std::pair<NodeId, double>> weights;
      for (const Node& n : ctx.nodes) {
        validate_node(n);
        weights.emplace_back(n.id, n.bandwidth);
      }
      return Pmf::from_weights(weights);
    }
    case Strategy::grp: {
      if (ctx.graph == nullptr) throw Error(Errc::invalid_argument, "grp pmf needs an analytical graph");
      return lb_pmf(grp_table(*ctx.graph, ctx.lambda, ctx.degree));
    }
  }
  throw Error(Errc::invalid_argument, "unknown strategy");
}

AnonymityDegree strategy_degree(Strategy strategy, const StrategyContext& ctx) {
  if (strategy == Strategy::grp) {
    if (ctx.graph == nullptr) throw Error(Errc::invalid_argument, "grp degree needs an analytical graph");
    return degree_grp(*ctx.graph, ctx.lambda, ctx.degree);
  }
  return anonymity_degree(strategy_pmf(strategy, ctx), ctx.nodes.size());
}

}  // namespace onionpath
