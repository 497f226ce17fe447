// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status is non-zero when any criterion fails.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "onionpath/error.hpp"
#include "onionpath/experiment.hpp"

using namespace onionpath;

namespace {

constexpr double kGeoReference = 0.7157;
constexpr double kGeoTolerance = 5e-5;
constexpr double kLbSumTolerance = 1e-9;
constexpr double kUniformLbSpread = 1e-12;
constexpr double kCompleteGraphTolerance = 1e-9;
constexpr double kAdversaryExactTolerance = 1e-15;
constexpr double kAdversaryEmpiricalTolerance = 0.002;
constexpr double kTvTolerance = 0.02;
constexpr double kEwmaTolerance = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

std::vector<NodeId> ids(std::size_t n) {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(node_id(static_cast<std::uint32_t>(i)));
  return out;
}

std::vector<Node> default_population(std::uint64_t seed) {
  const SimulationConfig c = default_config();
  Rng sample_rng(seed);
  PopulationSpec spec{c.countries, c.total,
                      synthetic_bandwidth_sample(c.bandwidth.sample_size, c.bandwidth.median_kbps, c.bandwidth.sigma,
                                                 sample_rng),
                      c.cluster_count};
  Rng rng(seed + 1);
  return generate_population(spec, rng);
}

// (A^lambda) for the adjacency matrix of K_n.
std::vector<std::vector<std::uint64_t>> complete_power(std::uint64_t n, std::uint64_t lambda) {
  std::vector<std::vector<std::uint64_t>> a(n, std::vector<std::uint64_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < n; ++j) a[i][j] = i != j;
  }
  auto p = a;
  for (std::uint64_t step = 1; step < lambda; ++step) {
    std::vector<std::vector<std::uint64_t>> next(n, std::vector<std::uint64_t>(n, 0));
    for (std::uint64_t i = 0; i < n; ++i) {
      for (std::uint64_t j = 0; j < n; ++j) {
        for (std::uint64_t k = 0; k < n; ++k) next[i][j] += p[i][k] * a[k][j];
      }
    }
    p = std::move(next);
  }
  return p;
}

Outcome closed_form_degrees() {
  const auto population = default_population(11);
  StrategyContext ctx;
  ctx.nodes = population;
  ctx.home_country = "US";
  const double d_rnd = strategy_degree(Strategy::rnd, ctx).value;
  const double d_geo = degree_geo(27, 100);
  const double d_geo_pmf = strategy_degree(Strategy::geo, ctx).value;
  const double d_bw = degree_bw(std::vector<double>(100, 512.0));
  const bool pass = d_rnd == 1.0 && std::abs(d_geo - kGeoReference) < kGeoTolerance &&
                    std::abs(d_geo_pmf - d_geo) < 1e-12 && d_bw == 1.0;
  return {pass, fmt::format("d_rnd={:.17g} d_geo={:.6f} (pmf {:.6f}, target {}) d_bw(uniform)={:.17g}", d_rnd, d_geo,
                            d_geo_pmf, kGeoReference, d_bw)};
}

Outcome walk_calculus() {
  std::size_t checked = 0, mismatches = 0;
  for (std::uint64_t n = 2; n <= 8; ++n) {
    for (std::uint64_t lambda = 1; lambda <= 6; ++lambda) {
      const auto p = complete_power(n, lambda);
      std::uint64_t total = 0;
      for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t j = 0; j < n; ++j) total += i != j ? p[i][j] : 0;
      }
      checked += 3;
      mismatches += walk_offdiag(n, lambda) != p[0][1];
      mismatches += walk_diag(n, lambda) != p[0][0];
      mismatches += total_walks(n, lambda) != total;
    }
  }
  const std::uint64_t t42 = total_walks(4, 2);
  return {mismatches == 0 && t42 == 24,
          fmt::format("{} closed-form values vs matrix powers, {} mismatches; total_walks(4,2)={}", checked,
                      mismatches, t42)};
}

Outcome recurrence_fidelity() {
  std::size_t cases = 0, rec_t_bad = 0, rec_d_bad = 0, literal_bad = 0, gap_bad = 0;
  std::string first_literal_failure;
  for (std::int64_t n = 2; n <= 8; ++n) {
    for (std::int64_t lambda = 1; lambda <= 6; ++lambda) {
      const auto t = static_cast<std::int64_t>(walk_offdiag(n, lambda));
      const auto d = static_cast<std::int64_t>(walk_diag(n, lambda));
      const std::int64_t sign = lambda % 2 == 0 ? 1 : -1;
      ++cases;
      if (lambda >= 2) {
        const auto tp = static_cast<std::int64_t>(walk_offdiag(n, lambda - 1));
        const auto dp = static_cast<std::int64_t>(walk_diag(n, lambda - 1));
        rec_t_bad += t != (n - 2) * tp + dp;
        rec_d_bad += d != (n - 1) * tp;
      }
      if (t != d + sign) {
        if (literal_bad++ == 0) {
          first_literal_failure = fmt::format("n={} lambda={}: t={} d={} d+(-1)^lambda={}", n, lambda, t, d, d + sign);
        }
      }
      gap_bad += d - t != sign;
    }
  }
  const bool pass = rec_t_bad == 0 && rec_d_bad == 0 && literal_bad == 0;
  return {pass, fmt::format("t-recurrence failures {}, d-recurrence failures {}; identity t=d+(-1)^lambda fails "
                            "{}/{} cases (first: {}); d-t=(-1)^lambda fails {}/{}",
                            rec_t_bad, rec_d_bad, literal_bad, cases, first_literal_failure, gap_bad, cases)};
}

// Exhaustive oracle: every injective map of lambda+1 positions into the vertex set.
std::vector<std::uint64_t> brute_sigma(const UndirectedGraph& g, std::size_t lambda, std::uint64_t& total) {
  const std::size_t n = g.vertex_count();
  std::vector<std::uint64_t> sigma(n, 0);
  total = 0;
  std::vector<std::size_t> perm(n);
  std::set<std::vector<std::size_t>> seen;
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  // Enumerate permutations; the first lambda+1 entries name a candidate path.
  do {
    std::vector<std::size_t> prefix(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(lambda + 1));
    if (!seen.insert(prefix).second) continue;
    bool ok = true;
    for (std::size_t i = 0; i + 1 < prefix.size() && ok; ++i) {
      ok = g.has_edge(g.vertex_at(prefix[i]), g.vertex_at(prefix[i + 1]));
    }
    if (!ok) continue;
    ++total;
    for (std::size_t v : prefix) ++sigma[v];
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sigma;
}

Outcome lb_correctness() {
  Rng rng(404);
  std::size_t graphs = 0, tables = 0, undefined_agree = 0, mismatches = 0, sum_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + uniform_below(rng, 5);  // 4..8 vertices
    const double p = 0.15 + 0.8 * uniform01(rng);
    UndirectedGraph g(ids(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (uniform01(rng) < p) g.add_edge(node_id(i), node_id(j), 1.0);
      }
    }
    ++graphs;
    for (std::size_t lambda : {2u, 3u}) {
      std::uint64_t total = 0;
      const auto sigma = brute_sigma(g, lambda, total);
      if (total == 0) {
        try {
          betweenness_table(g, lambda);
          ++mismatches;
        } catch (const Error& e) {
          if (e.code() == Errc::lb_undefined) {
            ++undefined_agree;
          } else {
            ++mismatches;
          }
        }
        continue;
      }
      const auto table = betweenness_table(g, lambda);
      ++tables;
      double sum = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        mismatches += table.rows[v].sigma != static_cast<double>(sigma[v]);
        sum += table.rows[v].lb;
      }
      mismatches += table.total_paths != static_cast<double>(total);
      sum_bad += std::abs(sum - 1.0) > kLbSumTolerance;
    }
  }
  double worst_spread = 0.0, worst_offset = 0.0;
  for (std::size_t n = 3; n <= 8; ++n) {
    for (std::size_t lambda : {2u, 3u}) {
      if (lambda >= n) continue;
      const auto t = betweenness_table(make_complete_graph(n), lambda);
      double lo = 1.0, hi = 0.0;
      for (const auto& r : t.rows) {
        lo = std::min(lo, r.lb);
        hi = std::max(hi, r.lb);
        worst_offset = std::max(worst_offset, std::abs(r.lb - 1.0 / static_cast<double>(n)));
      }
      worst_spread = std::max(worst_spread, hi - lo);
    }
  }
  const bool pass = mismatches == 0 && sum_bad == 0 && worst_spread < kUniformLbSpread &&
                    worst_offset < kUniformLbSpread;
  return {pass, fmt::format("{} graphs, {} tables vs enumeration oracle, {} undefined in both, {} mismatches, "
                            "{} LB sums off; K_n max-min LB {:.3g}, max |LB-1/n| {:.3g}",
                            graphs, tables, undefined_agree, mismatches, sum_bad, worst_spread, worst_offset)};
}

Outcome complete_graph_maximum() {
  const double d = degree_grp(make_complete_graph(20), 2).value;
  Rng rng(505);
  const std::vector<double> densities{0.2, 0.4, 0.6, 0.8, 1.0};
  const auto points = density_sweep(20, 2, densities, 20, rng);
  bool monotone = true;
  std::string curve;
  for (std::size_t i = 0; i < points.size(); ++i) {
    curve += fmt::format("{}{:.1f}:{:.5f}", i ? " " : "", points[i].density, points[i].mean_degree);
    if (points[i].gap()) monotone = false;
    if (i > 0) {
      const double pooled = std::hypot(points[i].std_error, points[i - 1].std_error);
      monotone = monotone && points[i].mean_degree >= points[i - 1].mean_degree - pooled;
    }
  }
  const bool pass = std::abs(d - 1.0) <= kCompleteGraphTolerance && monotone &&
                    std::abs(points.back().mean_degree - 1.0) <= kCompleteGraphTolerance;
  return {pass, fmt::format("d_grp(K_20, lambda=2)={:.12f}; sweep (20 trials each) {}", d, curve)};
}

Outcome adversary_bound() {
  const double exact = adversary_success(AdversaryModel::uniform(10, 100));
  const std::string printed = fmt::format("{:.4f}", exact);

  const std::size_t n = 100, c = 10;
  std::vector<Node> nodes;
  for (std::uint32_t i = 0; i < n; ++i) nodes.push_back(Node{node_id(i), "US", 100.0});
  auto marked = [c](NodeId id) { return raw(id) < c; };

  // Brute-force probability over every ordered triple of distinct relays.
  std::uint64_t both = 0, triples = 0;
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t x = 0; x < n; ++x) {
        if (e == m || m == x || e == x) continue;
        ++triples;
        both += marked(node_id(e)) && marked(node_id(x));
      }
    }
  }
  const double oracle = static_cast<double>(both) / static_cast<double>(triples);

  Rng rng(606);
  const std::size_t draws = 100000;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const Circuit circuit = select_random(nodes, node_id(1000), 3, rng);
    hits += marked(circuit.entry()) && marked(circuit.exit());
  }
  const double empirical = static_cast<double>(hits) / static_cast<double>(draws);
  const bool pass = std::abs(exact - 0.01) < kAdversaryExactTolerance && printed == "0.0100" &&
                    std::abs(empirical - oracle) <= kAdversaryEmpiricalTolerance;
  return {pass, fmt::format("(c/n)^2={} ({:.17g}); without-replacement oracle {:.6f} (closed form {:.6f}); "
                            "empirical {:.6f} over {} circuits",
                            printed, exact, oracle, adversary_success_without_replacement(c, n), empirical, draws)};
}

Outcome ewma_semantics() {
  Rng rng(707);
  const auto vs = ids(5);
  std::size_t bad = 0, first = 0, blended = 0, dropped = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Tick t0 = static_cast<Tick>(uniform_below(rng, 20));
    auto g = LatencyGraph::init(vs, node_id(0), t0);
    const Edge e{node_id(1), node_id(2 + uniform_below(rng, 3))};
    const Tick tp = t0 + 1 + static_cast<Tick>(uniform_below(rng, 60));
    const Tick tq = tp + static_cast<Tick>(uniform_below(rng, 60));
    const double lp = 500.0 * uniform01(rng);
    const double lq = 500.0 * uniform01(rng);
    const bool have_previous = uniform01(rng) < 0.7;
    const bool disconnected = uniform01(rng) < 0.25;
    if (have_previous) g.update_label(e, lp, tp);
    const Latency measurement = disconnected ? Latency{} : Latency{lq};
    g.update_label(e, measurement, tq);

    // Piecewise rule, written out independently.
    EdgeLabel expected;
    bool expect_edge;
    if (!measurement) {
      expected = have_previous ? EdgeLabel{lp, tp} : EdgeLabel{std::nullopt, t0};
      expect_edge = false;
      ++dropped;
    } else if (!have_previous) {
      expected = EdgeLabel{lq, tq};
      expect_edge = true;
      ++first;
    } else {
      const double a = static_cast<double>(tp - t0) / static_cast<double>(tq - t0);
      expected = EdgeLabel{a * lp + (1.0 - a) * lq, tq};
      expect_edge = true;
      ++blended;
    }
    const EdgeLabel got = g.label(e);
    bool ok = g.has_edge(e) == expect_edge && got.measured_at == expected.measured_at &&
              got.latency.has_value() == expected.latency.has_value();
    if (ok && got.latency) ok = std::abs(*got.latency - *expected.latency) <= kEwmaTolerance * (1.0 + *expected.latency);
    bad += !ok;
  }
  const double a = alpha(0, 5, 10);
  return {bad == 0 && a == 0.5,
          fmt::format("10000 fuzzed updates ({} first, {} blended, {} disconnections), {} mismatches; alpha(0,5,10)={}",
                      first, blended, dropped, bad, a)};
}

Outcome strategy_distributions() {
  const auto population = default_population(808);
  const NodeId client = node_id(100);
  const std::size_t draws = 100000;
  Rng rng(809);

  std::map<NodeId, double> f_rnd, f_geo, f_bw;
  double total_bw = 0.0;
  for (const Node& n : population) total_bw += n.bandwidth;
  for (const Node& n : population) {
    f_rnd[n.id] = 1.0 / static_cast<double>(population.size());
    f_geo[n.id] = n.country == "US" ? 1.0 / 27.0 : 0.0;
    f_bw[n.id] = n.bandwidth / total_bw;
  }
  auto tv = [&](const std::map<NodeId, double>& f, auto&& select) {
    std::map<NodeId, double> counts;
    for (std::size_t i = 0; i < draws; ++i) counts[select().entry()] += 1.0;
    double sum = 0.0;
    for (const auto& [id, p] : f) sum += std::abs(p - (counts.contains(id) ? counts[id] / draws : 0.0));
    for (const auto& [id, k] : counts) {
      if (!f.contains(id)) sum += k / draws;
    }
    return sum / 2.0;
  };
  const double tv_rnd = tv(f_rnd, [&] { return select_random(population, client, 3, rng); });
  const double tv_geo = tv(f_geo, [&] { return select_geo(population, client, 3, "US", rng); });
  const double tv_bw = tv(f_bw, [&] { return select_bw(population, client, 3, rng); });

  std::vector<NodeId> vs;
  for (const Node& n : population) vs.push_back(n.id);
  vs.push_back(client);
  const UndirectedGraph empty(vs);
  std::size_t fallbacks = 0;
  const std::size_t grp_draws = 2000;
  for (std::size_t i = 0; i < grp_draws; ++i) {
    fallbacks += select_grp(empty, client, 3, 300, 5, rng).provenance == Provenance::random_fallback;
  }
  const double fallback_rate = static_cast<double>(fallbacks) / grp_draws;
  const bool pass = tv_rnd < kTvTolerance && tv_geo < kTvTolerance && tv_bw < kTvTolerance && fallback_rate == 1.0;
  return {pass, fmt::format("TV rnd={:.4f} geo={:.4f} bw={:.4f} at {} draws; grp on empty graph fallback_rate={}",
                            tv_rnd, tv_geo, tv_bw, draws, fallback_rate)};
}

Outcome experiment_trends() {
  const ExperimentResult r = run_experiment(default_config());
  if (!r.ok()) return {false, "a cell failed"};
  std::map<std::tuple<Strategy, double, std::size_t>, const CellResult*> cell;
  for (const CellResult& c : r.cells) cell[{c.strategy, c.page_kb, c.delta}] = &c;
  auto at = [&](Strategy s) { return cell.at({s, 320.0, 3}); };
  const double geo = at(Strategy::geo)->avg_s, grp = at(Strategy::grp)->avg_s, bw = at(Strategy::bw)->avg_s,
               rnd = at(Strategy::rnd)->avg_s;
  const bool order = geo < grp && grp < bw && bw < rnd;
  const double sd_geo = at(Strategy::geo)->std_s;
  const bool geo_tightest = sd_geo < at(Strategy::grp)->std_s && sd_geo < at(Strategy::bw)->std_s &&
                            sd_geo < at(Strategy::rnd)->std_s;
  std::size_t monotone_breaks = 0;
  for (Strategy s : {Strategy::rnd, Strategy::geo, Strategy::bw, Strategy::grp}) {
    for (double page : {50.0, 150.0, 320.0}) {
      for (std::size_t d = 3; d < 6; ++d) monotone_breaks += cell.at({s, page, d + 1})->avg_s < cell.at({s, page, d})->avg_s;
    }
  }
  return {order && geo_tightest && monotone_breaks == 0,
          fmt::format("320KB delta=3 avg geo={:.3f} grp={:.3f} bw={:.3f} rnd={:.3f}; std geo={:.3f} grp={:.3f} "
                      "bw={:.3f} rnd={:.3f}; delta-monotonicity breaks {}/36; warm-up density {:.3f}",
                      geo, grp, bw, rnd, sd_geo, at(Strategy::grp)->std_s, at(Strategy::bw)->std_s,
                      at(Strategy::rnd)->std_s, monotone_breaks, r.warmup_density)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path();
  const auto a = dir / "onionpath_acceptance_a.csv";
  const auto b = dir / "onionpath_acceptance_b.csv";
  const std::string config = std::string(ONIONPATH_DATA_DIR) + "/default.json";
  auto invoke = [&](const std::filesystem::path& out) {
    const std::string cmd =
        fmt::format("\"{}\" run --config \"{}\" --seed 424242 --out \"{}\"", ONIONPATH_CLI, config, out.string());
    return std::system(cmd.c_str());
  };
  const int ra = invoke(a);
  const int rb = invoke(b);
  const std::string ca = slurp(a), cb = slurp(b);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
  const bool pass = ra == 0 && rb == 0 && !ca.empty() && ca == cb;
  return {pass, fmt::format("exit codes {} / {}; {} bytes vs {} bytes; identical={}", ra, rb, ca.size(), cb.size(),
                            ca == cb)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "closed-form degrees", 1.0, closed_form_degrees},
      {2, "walk calculus", 5.0, walk_calculus},
      {3, "recurrence fidelity", 0.0, recurrence_fidelity},
      {4, "LB correctness", 0.0, lb_correctness},
      {5, "complete-graph maximum", 120.0, complete_graph_maximum},
      {6, "adversary bound", 0.0, adversary_bound},
      {7, "EWMA semantics", 0.0, ewma_semantics},
      {8, "strategy distributions", 0.0, strategy_distributions},
      {9, "experiment trends", 300.0, experiment_trends},
      {10, "determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o = {false, fmt::format("threw: {}", ex.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt::format("; over the {:.0f} s budget", c.budget_s);
    }
    failures += !o.pass;
    fmt::print("criterion {:>2} {} {:<24} {:>8.2f}s  {}\n", c.id, o.pass ? "PASS" : "FAIL", c.title, secs, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
