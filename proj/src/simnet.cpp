#include "onionpath/simnet.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "onionpath/error.hpp"

namespace onionpath {

namespace {

double unit_from(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

std::uint64_t pair_key(NodeId a, NodeId b) {
  const Edge e{a, b};
  return (std::uint64_t{raw(e.a)} << 32) | raw(e.b);
}

void require_non_negative(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) throw Error(Errc::invalid_argument, fmt::format("{} must be >= 0, got {}", name, v));
}

}  // namespace

void validate(const PopulationSpec& spec) {
  if (spec.total == 0) throw Error(Errc::inconsistent_spec, "population total must be positive");
  std::size_t sum = 0;
  std::set<std::string> names;
  for (const auto& [country, count] : spec.country_counts) {
    if (country.empty()) throw Error(Errc::inconsistent_spec, "empty country name in population spec");
    if (!names.insert(country).second) {
      throw Error(Errc::inconsistent_spec, fmt::format("country {} listed twice", country));
    }
    sum += count;
  }
  if (sum != spec.total) {
    throw Error(Errc::inconsistent_spec, fmt::format("country counts sum to {} but total is {}", sum, spec.total));
  }
  if (spec.cluster_count == 0 || spec.cluster_count > spec.bandwidth_sample.size()) {
    throw Error(Errc::inconsistent_spec, fmt::format("cluster_count {} must lie in [1, {}]", spec.cluster_count,
                                                     spec.bandwidth_sample.size()));
  }
  for (double b : spec.bandwidth_sample) {
    if (!(b > 0.0) || !std::isfinite(b)) {
      throw Error(Errc::inconsistent_spec, fmt::format("bandwidth sample value {} is not positive", b));
    }
  }
}

std::vector<std::pair<std::string, std::size_t>> default_countries() {
  return {{"US", 27}, {"DE", 17}, {"RU", 6}, {"FR", 6}, {"NL", 6}, {"GB", 5}, {"SE", 4},
          {"CA", 3},  {"AT", 2},  {"AU", 1}, {"IT", 1}, {"UA", 1}, {"CZ", 1}, {"CH", 1},
          {"FI", 1},  {"LU", 1},  {"PL", 1}, {"JP", 1}, {"Others", 15}};
}

std::vector<double> synthetic_bandwidth_sample(std::size_t size, double median_kbps, double sigma, Rng& rng) {
  if (!(median_kbps > 0.0) || !(sigma >= 0.0)) {
    throw Error(Errc::invalid_argument, "log-normal sample needs median > 0 and sigma >= 0");
  }
  std::vector<double> out;
  out.reserve(size);
  const double mu = std::log(median_kbps);
  for (std::size_t i = 0; i < size; ++i) {
    // Box-Muller on our own uniforms keeps the sample identical across
    // standard library implementations.
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    out.push_back(std::exp(mu + sigma * z));
  }
  return out;
}

KMeansResult kmeans_detailed(std::span<const double> values, std::size_t cluster_count, std::size_t max_rounds,
                             Rng& rng) {
  if (cluster_count == 0) throw Error(Errc::invalid_argument, "k-means needs at least one cluster");
  if (cluster_count > values.size()) {
    throw Error(Errc::invalid_argument,
                fmt::format("k-means with {} clusters over {} values", cluster_count, values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "k-means input must be finite");
  }

  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> centroids;
  {
    std::vector<double> pool = distinct;
    while (centroids.size() < cluster_count && !pool.empty()) {
      const auto j = static_cast<std::size_t>(uniform_below(rng, pool.size()));
      centroids.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    // Fewer distinct values than clusters: the surplus seeds duplicate
    // existing ones and end up empty.
    while (centroids.size() < cluster_count) {
      centroids.push_back(distinct[uniform_below(rng, distinct.size())]);
    }
  }
  std::sort(centroids.begin(), centroids.end());

  KMeansResult result;
  std::vector<std::size_t> assignment(values.size(), std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> next(values.size());
  for (std::size_t round = 0; round < std::max<std::size_t>(max_rounds, 1); ++round) {
    double objective = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::size_t best = 0;
      double best_d = std::abs(values[i] - centroids[0]);
      for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double d = std::abs(values[i] - centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      next[i] = best;
      objective += best_d * best_d;
    }
    result.objective_history.push_back(objective);
    result.rounds = round + 1;
    if (next == assignment) break;
    assignment = next;

    std::vector<double> sum(centroids.size(), 0.0);
    std::vector<std::size_t> count(centroids.size(), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      sum[assignment[i]] += values[i];
      ++count[assignment[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (count[c] > 0) centroids[c] = sum[c] / static_cast<double>(count[c]);
    }
  }

  std::vector<std::size_t> order(centroids.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return centroids[l] < centroids[r]; });
  std::vector<std::size_t> rank(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    result.centroids.push_back(centroids[order[pos]]);
    rank[order[pos]] = pos;
  }
  result.assignment.reserve(assignment.size());
  for (std::size_t a : assignment) result.assignment.push_back(rank[a]);
  return result;
}

std::vector<double> kmeans(std::span<const double> values, std::size_t cluster_count, std::size_t max_rounds,
                           Rng& rng) {
  return kmeans_detailed(values, cluster_count, max_rounds, rng).centroids;
}

std::vector<Node> generate_population(const PopulationSpec& spec, Rng& rng) {
  validate(spec);
  const std::vector<double> centroids = kmeans(spec.bandwidth_sample, spec.cluster_count, 300, rng);
  std::vector<Node> nodes;
  nodes.reserve(spec.total);
  std::uint32_t next_id = 0;
  for (const auto& [country, count] : spec.country_counts) {
    for (std::size_t i = 0; i < count; ++i) {
      nodes.push_back(Node{node_id(next_id++), country, centroids[uniform_below(rng, centroids.size())]});
    }
  }
  return nodes;
}

void validate(const LatencyModel& m) {
  require_non_negative(m.intra_country_ms, "intra_country_ms");
  require_non_negative(m.inter_country_ms, "inter_country_ms");
  require_non_negative(m.jitter_ms, "jitter_ms");
  require_non_negative(m.pair_spread, "pair_spread");
  if (m.inter_country_ms < m.intra_country_ms) {
    throw Error(Errc::invalid_argument, "inter-country base latency must be >= intra-country base");
  }
  if (!(m.down_probability >= 0.0 && m.down_probability <= 1.0)) {
    throw Error(Errc::invalid_argument, fmt::format("down_probability {} outside [0,1]", m.down_probability));
  }
}

SimulatedNetwork::SimulatedNetwork(LatencyModel model, std::map<NodeId, std::string> countries, std::uint64_t seed)
    : model_(model), countries_(std::move(countries)), seed_(seed) {
  validate(model_);
}

const std::string& SimulatedNetwork::country(NodeId id) const {
  auto it = countries_.find(id);
  if (it == countries_.end()) {
    throw Error(Errc::unknown_vertex, fmt::format("node {} is not part of the simulated network", raw(id)));
  }
  return it->second;
}

double SimulatedNetwork::base_latency(NodeId a, NodeId b) const {
  return country(a) == country(b) ? model_.intra_country_ms : model_.inter_country_ms;
}

double SimulatedNetwork::pair_offset(NodeId a, NodeId b) const {
  const double u = unit_from(derive_seed(seed_, {tag("pair-offset"), pair_key(a, b)}));
  return base_latency(a, b) * model_.pair_spread * u;
}

double SimulatedNetwork::sample_latency(NodeId a, NodeId b, Tick t, std::uint64_t nonce) const {
  if (a == b) throw Error(Errc::invalid_argument, fmt::format("probe of node {} against itself", raw(a)));
  const double u =
      unit_from(derive_seed(seed_, {tag("jitter"), pair_key(a, b), static_cast<std::uint64_t>(t), nonce}));
  const double jitter = -model_.jitter_ms * std::log1p(-u);
  return base_latency(a, b) + pair_offset(a, b) + jitter;
}

Latency SimulatedNetwork::probe(NodeId a, NodeId b, Tick t, std::uint64_t nonce) const {
  if (a == b) throw Error(Errc::invalid_argument, fmt::format("probe of node {} against itself", raw(a)));
  const double u =
      unit_from(derive_seed(seed_, {tag("down"), pair_key(a, b), static_cast<std::uint64_t>(t), nonce}));
  if (u < model_.down_probability) return std::nullopt;
  return sample_latency(a, b, t, nonce);
}

ProbeOracle SimulatedNetwork::oracle() const {
  return [net = *this](Edge e, Tick t) { return net.probe(e.a, e.b, t); };
}

void validate(const TransferModel& m) {
  require_non_negative(m.handshake_per_link, "handshake_per_link");
  require_non_negative(m.processing_ms, "processing_ms");
  require_non_negative(m.page_kb, "page_kb");
}

double transfer_time(const TransferModel& model, const Circuit& circuit, std::span<const double> link_latencies_ms,
                     std::span<const double> bandwidths_kbps) {
  validate(model);
  const std::size_t delta = circuit.length();
  if (link_latencies_ms.size() != delta || bandwidths_kbps.size() != delta) {
    throw Error(Errc::invalid_argument,
                fmt::format("circuit of length {} got {} latencies and {} bandwidths", delta,
                            link_latencies_ms.size(), bandwidths_kbps.size()));
  }
  double latency_sum = 0.0;
  for (double l : link_latencies_ms) {
    require_non_negative(l, "link latency");
    latency_sum += l;
  }
  double min_bw = std::numeric_limits<double>::infinity();
  for (double b : bandwidths_kbps) {
    if (!(b > 0.0) || !std::isfinite(b)) {
      throw Error(Errc::invalid_argument, fmt::format("bandwidth must be > 0, got {}", b));
    }
    min_bw = std::min(min_bw, b);
  }
  return latency_sum * model.handshake_per_link / 1000.0 +
         static_cast<double>(delta) * model.processing_ms / 1000.0 + model.page_kb / min_bw;
}

}  // namespace onionpath
