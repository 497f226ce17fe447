#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "onionpath/paths.hpp"
#include "onionpath/types.hpp"

namespace onionpath {

/// Probability mass function over relays.
///
/// Construction rejects any probability outside [0,1] and any total further
/// than 1e-9 from one; totals within tolerance are renormalized exactly.
class Pmf {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit Pmf(std::map<NodeId, double> probabilities);

  static Pmf uniform(std::span<const NodeId> support);
  // p_i = weight_i / sum(weights); all weights must be finite and >= 0.
  static Pmf from_weights(std::span<const std::pair<NodeId, double>> weights);

  const std::map<NodeId, double>& probabilities() const { return probabilities_; }
  double operator[](NodeId id) const;
  std::size_t size() const { return probabilities_.size(); }
  // Number of entries with non-zero probability.
  std::size_t support_size() const;

 private:
  std::map<NodeId, double> probabilities_;
};

struct AnonymityDegree {
  double value = 0.0;
  double entropy_bits = 0.0;
  double max_entropy_bits = 0.0;
  std::size_t population_size = 0;
  // True when the underlying pmf came from a sampled estimator.
  bool estimated = false;
};

/// Probabilities with which the adversary's relays are selected.
class AdversaryModel {
 public:
  explicit AdversaryModel(std::vector<double> controlled_probabilities);

  // c relays of a network of n relays under uniform selection.
  static AdversaryModel uniform(std::size_t controlled_count, std::size_t population_size);

  const std::vector<double>& controlled_probabilities() const { return probabilities_; }
  std::size_t controlled_count() const { return probabilities_.size(); }

 private:
  std::vector<double> probabilities_;
};

// Shannon entropy in bits, 0 * log2(0) taken as 0.
double entropy(const Pmf& pmf);

// entropy(pmf) / log2(population_size).
AnonymityDegree anonymity_degree(const Pmf& pmf, std::size_t population_size);

// Probability that both the entry and the exit are adversarial when every
// hop is drawn independently: (sum p_i)^2.
double adversary_success(const AdversaryModel& model);

// Same event when entry and exit are drawn without replacement from n
// uniformly weighted relays: c(c-1) / (n(n-1)).
double adversary_success_without_replacement(std::size_t controlled_count, std::size_t population_size);

// log2(m) / log2(n) for m in-country relays out of n.
double degree_geo(std::size_t country_count, std::size_t population_size);

// Degree of the bandwidth-proportional pmf.
double degree_bw(std::span<const double> bandwidths);

struct GrpDegreeOptions {
  ExactLimits limits{};
  std::size_t samples = 200000;  // used only past the exact limits
  std::uint64_t seed = 1;
};

/// Degree of the lambda-betweenness pmf over the analytical graph. Uses the
/// exact table when the graph fits `options.limits`, otherwise lb_estimate
/// and marks the result as estimated.
AnonymityDegree degree_grp(const AnalyticalGraph& graph, std::size_t lambda, const GrpDegreeOptions& options = {});

// Normalized sigma column of a betweenness table.
Pmf lb_pmf(const BetweennessTable& table);
// Exact table within `options.limits`, sampled estimate otherwise.
BetweennessTable grp_table(const AnalyticalGraph& graph, std::size_t lambda, const GrpDegreeOptions& options);

}  // namespace onionpath
