#include "onionpath/latency_graph.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <condition_variable>

#include "onionpath/error.hpp"

namespace onionpath {

namespace {

nlohmann::json label_json(Edge e, const EdgeLabel& label) {
  return {{"a", raw(e.a)}, {"b", raw(e.b)}, {"latency_ms", *label.latency}, {"measured_at", label.measured_at}};
}

}  // namespace

double alpha(Tick t0, Tick tp, Tick tq) {
  if (tq == t0) {
    throw Error(Errc::zero_elapsed_time, "zero elapsed time: tq equals t0, alpha is undefined");
  }
  if (!(t0 <= tp && tp <= tq)) {
    throw Error(Errc::invalid_argument, fmt::format("alpha needs t0 <= tp <= tq (got {}, {}, {})", t0, tp, tq));
  }
  return static_cast<double>(tp - t0) / static_cast<double>(tq - t0);
}

LatencyGraph LatencyGraph::init(std::span<const NodeId> vertices, NodeId client, Tick t0) {
  LatencyGraph g;
  g.vertices_.assign(vertices.begin(), vertices.end());
  std::sort(g.vertices_.begin(), g.vertices_.end(), [](NodeId l, NodeId r) { return raw(l) < raw(r); });
  g.vertices_.erase(std::unique(g.vertices_.begin(), g.vertices_.end()), g.vertices_.end());
  if (g.vertices_.size() < 2) {
    throw Error(Errc::invalid_argument, "a latency graph needs at least two distinct vertices");
  }
  g.client_ = client;
  if (!g.contains(client)) {
    throw Error(Errc::unknown_vertex, fmt::format("client {} is not among the vertices", raw(client)));
  }
  g.t0_ = t0;
  return g;
}

bool LatencyGraph::contains(NodeId v) const {
  return std::binary_search(vertices_.begin(), vertices_.end(), v,
                            [](NodeId l, NodeId r) { return raw(l) < raw(r); });
}

EdgeLabel LatencyGraph::label(Edge e) const {
  auto it = labels_.find(e);
  if (it == labels_.end()) return EdgeLabel{std::nullopt, t0_};
  return it->second;
}

void LatencyGraph::check_edge(Edge e) const {
  if (e.a == e.b) throw Error(Errc::invalid_argument, fmt::format("self-edge on vertex {}", raw(e.a)));
  for (NodeId v : {e.a, e.b}) {
    if (!contains(v)) throw Error(Errc::unknown_vertex, fmt::format("vertex {} is not in the latency graph", raw(v)));
  }
}

void LatencyGraph::update_label(Edge e, Latency measured, Tick tq) {
  check_edge(e);
  const EdgeLabel previous = label(e);
  if (tq < previous.measured_at || tq < t0_) {
    throw Error(Errc::time_regression,
                fmt::format("time regression on ({}, {}): tq={} but last update at {}", raw(e.a), raw(e.b), tq,
                            std::max(previous.measured_at, t0_)));
  }
  if (!measured) {
    edges_.erase(e);
    return;
  }
  const double lq = *measured;
  if (!std::isfinite(lq) || lq < 0.0) {
    throw Error(Errc::invalid_argument, fmt::format("measured latency must be finite and >= 0, got {}", lq));
  }
  if (!previous.latency) {
    labels_[e] = EdgeLabel{lq, tq};
  } else {
    const double lp = *previous.latency;
    const double a = alpha(t0_, previous.measured_at, tq);
    const double blended = a * lp + (1.0 - a) * lq;
    labels_[e] = EdgeLabel{std::clamp(blended, std::min(lp, lq), std::max(lp, lq)), tq};
  }
  edges_.insert(e);
}

UndirectedGraph LatencyGraph::weighted_graph() const {
  UndirectedGraph g(vertices_);
  for (const Edge& e : edges_) g.add_edge(e.a, e.b, *labels_.at(e).latency);
  return g;
}

double LatencyGraph::density() const {
  const double n = static_cast<double>(vertices_.size());
  return 2.0 * static_cast<double>(edges_.size()) / (n * (n - 1.0));
}

nlohmann::json LatencyGraph::to_json() const {
  nlohmann::json vertices = nlohmann::json::array();
  for (NodeId v : vertices_) vertices.push_back(raw(v));
  nlohmann::json edges = nlohmann::json::array();
  nlohmann::json retained = nlohmann::json::array();
  for (const auto& [e, l] : labels_) {
    (edges_.contains(e) ? edges : retained).push_back(label_json(e, l));
  }
  return {{"vertices", std::move(vertices)},
          {"client", raw(client_)},
          {"t0", t0_},
          {"edges", std::move(edges)},
          {"retained", std::move(retained)}};
}

LatencyGraph LatencyGraph::from_json(const nlohmann::json& j) {
  try {
    std::vector<NodeId> vertices;
    for (const auto& v : j.at("vertices")) vertices.push_back(node_id(v.get<std::uint32_t>()));
    LatencyGraph g = init(vertices, node_id(j.at("client").get<std::uint32_t>()), j.at("t0").get<Tick>());
    auto read = [&g](const nlohmann::json& item, bool in_edge_set) {
      const Edge e{node_id(item.at("a").get<std::uint32_t>()), node_id(item.at("b").get<std::uint32_t>())};
      g.check_edge(e);
      const double latency = item.at("latency_ms").get<double>();
      const Tick at = item.at("measured_at").get<Tick>();
      if (!std::isfinite(latency) || latency < 0.0 || at < g.t0_) {
        throw Error(Errc::parse_error, fmt::format("invalid label on ({}, {})", raw(e.a), raw(e.b)));
      }
      g.labels_[e] = EdgeLabel{latency, at};
      if (in_edge_set) g.edges_.insert(e);
    };
    for (const auto& item : j.at("edges")) read(item, true);
    if (j.contains("retained")) {
      for (const auto& item : j.at("retained")) read(item, false);
    }
    return g;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::parse_error, fmt::format("malformed latency graph JSON: {}", ex.what()));
  }
}

void measurement_round(LatencyGraph& graph, const ProbeOracle& oracle, std::size_t probes_per_round, Tick tq,
                       Rng& rng) {
  const auto& vs = graph.vertices();
  const std::size_t n = vs.size();
  for (std::size_t i = 0; i < probes_per_round; ++i) {
    const auto a = static_cast<std::size_t>(uniform_below(rng, n));
    auto b = static_cast<std::size_t>(uniform_below(rng, n - 1));
    if (b >= a) ++b;
    const Edge e{vs[a], vs[b]};
    graph.update_label(e, oracle(e, tq), tq);
  }
}

AnalyticalGraph analytical_graph(const LatencyGraph& graph) {
  std::vector<NodeId> vs;
  for (NodeId v : graph.vertices()) {
    if (v != graph.client()) vs.push_back(v);
  }
  AnalyticalGraph g(std::move(vs));
  for (const Edge& e : graph.edges()) {
    if (e.a == graph.client() || e.b == graph.client()) continue;
    g.add_edge(e.a, e.b, *graph.label(e).latency);
  }
  return g;
}

LatencyMonitor::LatencyMonitor(LatencyGraph graph, ProbeOracle oracle, std::size_t probes_per_round,
                               std::uint64_t seed)
    : shared_(graph),
      oracle_(std::move(oracle)),
      probes_per_round_(probes_per_round),
      rng_(seed),
      tq_(graph.start_time()),
      vertices_(graph.vertices()) {
  if (probes_per_round_ == 0) throw Error(Errc::invalid_argument, "probes_per_round must be at least 1");
}

LatencyMonitor::~LatencyMonitor() { stop(); }

void LatencyMonitor::step() {
  std::lock_guard lock(step_mutex_);
  const Tick tq = ++tq_;
  const auto& vs = vertices_;
  const std::size_t n = vs.size();

  // Probe outside the graph lock; readers keep seeing the previous round.
  std::vector<std::pair<Edge, Latency>> probes;
  probes.reserve(probes_per_round_);
  for (std::size_t i = 0; i < probes_per_round_; ++i) {
    const auto a = static_cast<std::size_t>(uniform_below(rng_, n));
    auto b = static_cast<std::size_t>(uniform_below(rng_, n - 1));
    if (b >= a) ++b;
    const Edge e{vs[a], vs[b]};
    probes.emplace_back(e, oracle_(e, tq));
  }
  shared_.modify([&](LatencyGraph& g) {
    for (const auto& [e, latency] : probes) g.update_label(e, latency, tq);
  });
}

void LatencyMonitor::run_rounds(std::size_t rounds) {
  for (std::size_t i = 0; i < rounds; ++i) step();
}

void LatencyMonitor::start(std::chrono::milliseconds interval) {
  if (worker_.joinable()) return;
  worker_ = std::jthread([this, interval](std::stop_token stop) {
    std::mutex m;
    std::condition_variable_any cv;
    while (!stop.stop_requested()) {
      step();
      std::unique_lock lock(m);
      cv.wait_for(lock, stop, interval, [] { return false; });
    }
  });
}

void LatencyMonitor::stop() {
  if (!worker_.joinable()) return;
  worker_.request_stop();
  worker_.join();
}

Tick LatencyMonitor::now() const {
  std::lock_guard lock(step_mutex_);
  return tq_;
}

}  // namespace onionpath
