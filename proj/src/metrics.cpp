#include "onionpath/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "onionpath/error.hpp"

namespace onionpath {

namespace {

// Compensated summation; probabilities built from empirical counts or from
// many tiny weights lose precision with a naive running sum.
double neumaier_sum(auto&& range) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : range) {
    const double t = sum + x;
    comp += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

void require_population(std::size_t n) {
  if (n < 2) {
    throw Error(Errc::degenerate_network, fmt::format("degenerate network: population of {} (need >= 2)", n));
  }
}

}  // namespace

Pmf::Pmf(std::map<NodeId, double> probabilities) : probabilities_(std::move(probabilities)) {
  if (probabilities_.empty()) throw Error(Errc::invalid_pmf, "pmf has no entries");
  std::vector<double> values;
  values.reserve(probabilities_.size());
  for (const auto& [id, p] : probabilities_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(Errc::invalid_pmf, fmt::format("probability of node {} is {} (outside [0,1])", raw(id), p));
    }
    values.push_back(p);
  }
  const double total = neumaier_sum(values);
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw Error(Errc::invalid_pmf, fmt::format("probabilities sum to {} (tolerance {})", total, kSumTolerance));
  }
  for (auto& [id, p] : probabilities_) p /= total;
}

Pmf Pmf::uniform(std::span<const NodeId> support) {
  if (support.empty()) throw Error(Errc::invalid_pmf, "uniform pmf over an empty support");
  std::map<NodeId, double> probs;
  for (NodeId id : support) probs[id] = 0.0;
  const double p = 1.0 / static_cast<double>(probs.size());
  for (auto& [id, q] : probs) q = p;
  return Pmf(std::move(probs));
}

Pmf Pmf::from_weights(std::span<const std::pair<NodeId, double>> weights) {
  std::vector<double> values;
  for (const auto& [id, w] : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(Errc::invalid_pmf, fmt::format("weight of node {} is {}", raw(id), w));
    }
    values.push_back(w);
  }
  const double total = neumaier_sum(values);
  if (!(total > 0.0)) throw Error(Errc::invalid_pmf, "weights sum to zero");
  std::map<NodeId, double> probs;
  for (const auto& [id, w] : weights) probs[id] += w / total;
  return Pmf(std::move(probs));
}

double Pmf::operator[](NodeId id) const {
  auto it = probabilities_.find(id);
  return it == probabilities_.end() ? 0.0 : it->second;
}

std::size_t Pmf::support_size() const {
  std::size_t count = 0;
  for (const auto& [id, p] : probabilities_) count += (p > 0.0);
  return count;
}

AdversaryModel::AdversaryModel(std::vector<double> controlled_probabilities)
    : probabilities_(std::move(controlled_probabilities)) {
  for (double p : probabilities_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(Errc::invalid_argument, fmt::format("controlled probability {} outside [0,1]", p));
    }
  }
  if (neumaier_sum(probabilities_) > 1.0 + Pmf::kSumTolerance) {
    throw Error(Errc::invalid_argument, "controlled probabilities sum to more than one");
  }
}

AdversaryModel AdversaryModel::uniform(std::size_t controlled_count, std::size_t population_size) {
  require_population(population_size);
  if (controlled_count > population_size) {
    throw Error(Errc::invalid_argument, "adversary controls more relays than exist");
  }
  return AdversaryModel(std::vector<double>(controlled_count, 1.0 / static_cast<double>(population_size)));
}

double entropy(const Pmf& pmf) {
  // Uniform on its support: H = log2(|support|) exactly.
  double common = 0.0;
  bool uniform = true;
  for (const auto& [id, p] : pmf.probabilities()) {
    if (p == 0.0) continue;
    if (common == 0.0) common = p;
    uniform = uniform && (p == common);
  }
  if (uniform) return std::log2(static_cast<double>(pmf.support_size()));

  std::vector<double> terms;
  terms.reserve(pmf.size());
  for (const auto& [id, p] : pmf.probabilities()) {
    if (p > 0.0) terms.push_back(-p * std::log2(p));
  }
  const double h = neumaier_sum(terms);
  return h < 0.0 ? 0.0 : h;
}

AnonymityDegree anonymity_degree(const Pmf& pmf, std::size_t population_size) {
  require_population(population_size);
  if (pmf.size() > population_size) {
    throw Error(Errc::invalid_argument,
                fmt::format("pmf has {} entries but the population has {}", pmf.size(), population_size));
  }
  AnonymityDegree d;
  d.population_size = population_size;
  d.entropy_bits = entropy(pmf);
  d.max_entropy_bits = std::log2(static_cast<double>(population_size));
  d.value = std::clamp(d.entropy_bits / d.max_entropy_bits, 0.0, 1.0);
  return d;
}

double adversary_success(const AdversaryModel& model) {
  const double mass = neumaier_sum(model.controlled_probabilities());
  return mass * mass;
}

double adversary_success_without_replacement(std::size_t controlled_count, std::size_t population_size) {
  require_population(population_size);
  if (controlled_count > population_size) {
    throw Error(Errc::invalid_argument, "adversary controls more relays than exist");
  }
  const double c = static_cast<double>(controlled_count);
  const double n = static_cast<double>(population_size);
  return c * (c - 1.0) / (n * (n - 1.0));
}

double degree_geo(std::size_t country_count, std::size_t population_size) {
  if (country_count == 0) throw Error(Errc::empty_country, "empty country: no relay in the home country");
  require_population(population_size);
  if (country_count > population_size) {
    throw Error(Errc::invalid_argument,
                fmt::format("country has {} relays but the network only {}", country_count, population_size));
  }
  return std::log2(static_cast<double>(country_count)) / std::log2(static_cast<double>(population_size));
}

double degree_bw(std::span<const double> bandwidths) {
  require_population(bandwidths.size());
  std::vector<std::pair<NodeId, double>> weights;
  weights.reserve(bandwidths.size());
  for (std::size_t i = 0; i < bandwidths.size(); ++i) {
    if (!(bandwidths[i] > 0.0) || !std::isfinite(bandwidths[i])) {
      throw Error(Errc::invalid_argument, fmt::format("bandwidth #{} is {} (must be > 0)", i, bandwidths[i]));
    }
    weights.emplace_back(node_id(static_cast<std::uint32_t>(i)), bandwidths[i]);
  }
  return anonymity_degree(Pmf::from_weights(weights), bandwidths.size()).value;
}

BetweennessTable grp_table(const AnalyticalGraph& graph, std::size_t lambda, const GrpDegreeOptions& options) {
  if (graph.vertex_count() <= options.limits.max_vertices && lambda <= options.limits.max_length) {
    return betweenness_table(graph, lambda, options.limits);
  }
  Rng rng(derive_seed(options.seed, {tag("lb_estimate"), lambda}));
  return lb_estimate(graph, lambda, options.samples, rng);
}

Pmf lb_pmf(const BetweennessTable& table) {
  std::vector<std::pair<NodeId, double>> weights;
  weights.reserve(table.rows.size());
  for (const BetweennessRow& row : table.rows) weights.emplace_back(row.node, row.sigma);
  return Pmf::from_weights(weights);
}

AnonymityDegree degree_grp(const AnalyticalGraph& graph, std::size_t lambda, const GrpDegreeOptions& options) {
  if (graph.vertex_count() == 0) throw Error(Errc::lb_undefined, "LB undefined: empty analytical graph");
  require_population(graph.vertex_count());
  const BetweennessTable table = grp_table(graph, lambda, options);
  AnonymityDegree d = anonymity_degree(lb_pmf(table), graph.vertex_count());
  d.estimated = table.estimated;
  return d;
}

}  // namespace onionpath
