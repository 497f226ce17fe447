#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "onionpath/error.hpp"
#include "onionpath/paths.hpp"

using namespace onionpath;

namespace {

// Adjacency-matrix oracle for the brute-force checks below.
struct Matrix {
  std::size_t n;
  std::vector<std::vector<char>> adj;
};

Matrix to_matrix(const UndirectedGraph& g) {
  Matrix m{g.vertex_count(), std::vector<std::vector<char>>(g.vertex_count(), std::vector<char>(g.vertex_count()))};
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = 0; j < m.n; ++j) m.adj[i][j] = i != j && g.has_edge(g.vertex_at(i), g.vertex_at(j));
  }
  return m;
}

// Every ordered sequence of lambda+1 distinct vertices, tested edge by edge.
std::vector<std::vector<std::size_t>> all_simple_paths(const Matrix& m, std::size_t lambda) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> seq(lambda + 1, 0);
  // Odometer over n^(lambda+1) sequences.
  while (true) {
    bool ok = true;
    for (std::size_t i = 0; i < seq.size() && ok; ++i) {
      for (std::size_t j = i + 1; j < seq.size() && ok; ++j) ok = seq[i] != seq[j];
    }
    for (std::size_t i = 0; i + 1 < seq.size() && ok; ++i) ok = m.adj[seq[i]][seq[i + 1]];
    if (ok) out.push_back(seq);
    std::size_t pos = 0;
    while (pos < seq.size() && ++seq[pos] == m.n) seq[pos++] = 0;
    if (pos == seq.size()) break;
  }
  return out;
}

UndirectedGraph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<NodeId> vs;
  for (std::size_t i = 0; i < n; ++i) vs.push_back(node_id(static_cast<std::uint32_t>(10 * i + 3)));
  UndirectedGraph g(vs);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (uniform01(rng) < p) g.add_edge(vs[i], vs[j], 1.0 + 99.0 * uniform01(rng));
    }
  }
  return g;
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an onionpath::Error");
  return Errc::invalid_argument;
}

}  // namespace

TEST_CASE("graph basics") {
  UndirectedGraph g({node_id(5), node_id(1), node_id(3), node_id(1)});
  CHECK(g.vertex_count() == 3);
  CHECK(g.vertex_at(0) == node_id(1));
  g.add_edge(node_id(5), node_id(1), 7.5);
  CHECK(g.has_edge(node_id(1), node_id(5)));
  CHECK(*g.weight(node_id(1), node_id(5)) == 7.5);
  g.add_edge(node_id(1), node_id(5), 2.0);  // overwrite, no duplicate
  CHECK(g.edge_count() == 1);
  CHECK(*g.weight(node_id(5), node_id(1)) == 2.0);
  CHECK(g.density() == doctest::Approx(1.0 / 3.0));
  g.remove_edge(node_id(1), node_id(5));
  CHECK(g.edge_count() == 0);
  CHECK(g.neighbors(0).empty());
  CHECK(code_of([&] { g.add_edge(node_id(1), node_id(1)); }) == Errc::invalid_argument);
  CHECK(code_of([&] { g.add_edge(node_id(1), node_id(9)); }) == Errc::unknown_vertex);
  CHECK(code_of([&] { g.add_edge(node_id(1), node_id(3), -1.0); }) == Errc::invalid_argument);
}

TEST_CASE("random graph has the requested edge count") {
  Rng rng(3);
  for (std::size_t n : {2u, 5u, 20u}) {
    for (double d : {0.0, 0.2, 0.5, 0.67, 1.0}) {
      const auto g = make_random_graph(n, d, rng);
      CHECK(g.edge_count() == static_cast<std::size_t>(std::llround(d * n * (n - 1) / 2.0)));
    }
  }
  CHECK(code_of([&] { make_random_graph(4, 1.5, rng); }) == Errc::invalid_argument);
}

TEST_CASE("count_paths and betweenness equal brute-force enumeration") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + uniform_below(rng, 7);
    const auto g = random_graph(n, 0.2 + 0.7 * uniform01(rng), rng);
    const Matrix m = to_matrix(g);
    for (std::size_t lambda = 1; lambda <= std::min<std::size_t>(4, n - 1); ++lambda) {
      const auto paths = all_simple_paths(m, lambda);
      std::vector<std::vector<std::uint64_t>> pair_count(n, std::vector<std::uint64_t>(n, 0));
      std::vector<std::uint64_t> through(n, 0);
      for (const auto& p : paths) {
        ++pair_count[p.front()][p.back()];
        for (std::size_t v : p) ++through[v];
      }
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < n; ++t) {
          if (s != t) CHECK(count_paths(g, g.vertex_at(s), g.vertex_at(t), lambda) == pair_count[s][t]);
        }
      }
      if (paths.empty()) {
        CHECK(code_of([&] { betweenness_table(g, lambda); }) == Errc::lb_undefined);
        continue;
      }
      const BetweennessTable table = betweenness_table(g, lambda);
      CHECK(table.total_paths == static_cast<double>(paths.size()));
      double lb_sum = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        CHECK(table.rows[v].node == g.vertex_at(v));
        CHECK(table.rows[v].sigma == static_cast<double>(through[v]));
        CHECK(table.rows[v].kp_b == doctest::Approx(static_cast<double>(through[v]) / paths.size()));
        lb_sum += table.rows[v].lb;
      }
      CHECK(std::abs(lb_sum - 1.0) < 1e-9);
      CHECK_FALSE(table.estimated);
    }
  }
}

TEST_CASE("complete graph betweenness is uniform") {
  for (std::size_t n = 3; n <= 9; ++n) {
    for (std::size_t lambda = 1; lambda < std::min<std::size_t>(n, 5); ++lambda) {
      const auto t = betweenness_table(make_complete_graph(n), lambda);
      double lo = 1.0, hi = 0.0;
      for (const auto& r : t.rows) {
        lo = std::min(lo, r.lb);
        hi = std::max(hi, r.lb);
      }
      CHECK(hi - lo < 1e-12);
      CHECK(lo == doctest::Approx(1.0 / n).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact enumeration refuses oversized instances") {
  const auto big = make_complete_graph(21);
  CHECK(code_of([&] { betweenness_table(big, 2); }) == Errc::instance_too_large);
  CHECK(code_of([&] { betweenness_table(make_complete_graph(8), 7); }) == Errc::instance_too_large);
  CHECK(code_of([&] { count_paths(big, node_id(0), node_id(1), 2); }) == Errc::instance_too_large);
  CHECK(betweenness_table(big, 2, ExactLimits{30, 6}).rows.size() == 21);
}

TEST_CASE("graphs without any path of the length have undefined LB") {
  UndirectedGraph empty({node_id(0), node_id(1), node_id(2)});
  CHECK(code_of([&] { betweenness_table(empty, 2); }) == Errc::lb_undefined);
  Rng rng(1);
  CHECK(code_of([&] { lb_estimate(empty, 2, 100, rng); }) == Errc::lb_undefined);
}

TEST_CASE("kpaths returns simple paths of the exact length, at most k, and all of them when k is large") {
  Rng rng(77);
  for (int trial = 0; trial < 80; ++trial) {
    const std::size_t n = 3 + uniform_below(rng, 6);
    const auto g = random_graph(n, 0.3 + 0.6 * uniform01(rng), rng);
    const NodeId s = g.vertex_at(uniform_below(rng, n));
    NodeId t = s;
    while (t == s) t = g.vertex_at(uniform_below(rng, n));
    const std::size_t lambda = 1 + uniform_below(rng, std::min<std::size_t>(n - 1, 6));
    const std::uint64_t expected = count_paths(g, s, t, lambda);

    const auto all = kpaths(g, s, t, lambda, 1000000, rng);
    CHECK(all.size() == expected);
    std::set<std::vector<NodeId>> distinct;
    for (const auto& p : all) {
      CHECK(is_simple_path(g, p));
      CHECK(p.length_in_edges() == lambda);
      CHECK(p.vertices.front() == s);
      CHECK(p.vertices.back() == t);
      distinct.insert(p.vertices);
    }
    CHECK(distinct.size() == all.size());

    const std::size_t k = 1 + uniform_below(rng, 3);
    CHECK(kpaths(g, s, t, lambda, k, rng).size() == std::min<std::uint64_t>(k, expected));
  }
}

TEST_CASE("kpaths rejects bad arguments") {
  Rng rng(1);
  const auto g = make_complete_graph(4);
  CHECK(code_of([&] { kpaths(g, node_id(0), node_id(0), 2, 5, rng); }) == Errc::invalid_argument);
  CHECK(code_of([&] { kpaths(g, node_id(0), node_id(1), 0, 5, rng); }) == Errc::invalid_argument);
  CHECK(code_of([&] { kpaths(g, node_id(0), node_id(1), 2, 0, rng); }) == Errc::invalid_argument);
  CHECK(code_of([&] { kpaths(g, node_id(0), node_id(9), 2, 5, rng); }) == Errc::unknown_vertex);
  CHECK(kpaths(g, node_id(0), node_id(1), 4, 5, rng).empty());  // longer than n-1 edges
}

TEST_CASE("kpaths is reproducible for a fixed seed") {
  const auto g = make_complete_graph(8);
  Rng a(5), b(5);
  CHECK(kpaths(g, node_id(0), node_id(7), 3, 10, a) == kpaths(g, node_id(0), node_id(7), 3, 10, b));
}

TEST_CASE("sampled LB converges to the exact table") {
  Rng rng(8);
  for (int trial = 0; trial < 6; ++trial) {
    const auto g = random_graph(10, 0.5, rng);
    for (std::size_t lambda : {2u, 3u}) {
      BetweennessTable exact;
      try {
        exact = betweenness_table(g, lambda);
      } catch (const Error&) {
        continue;
      }
      Rng est_rng(trial * 10 + lambda);
      const auto est = lb_estimate(g, lambda, 200000, est_rng);
      CHECK(est.estimated);
      // Unbiased for the number of paths.
      CHECK(est.total_paths == doctest::Approx(exact.total_paths).epsilon(0.03));
      for (std::size_t v = 0; v < exact.rows.size(); ++v) CHECK(std::abs(est.rows[v].lb - exact.rows[v].lb) < 0.01);
    }
  }
}

TEST_CASE("walk closed forms match matrix powers of K_n") {
  for (std::uint64_t n = 2; n <= 8; ++n) {
    // A^lambda for the complete-graph adjacency matrix, computed by repeated multiplication.
    std::vector<std::vector<std::uint64_t>> a(n, std::vector<std::uint64_t>(n)), p;
    for (std::uint64_t i = 0; i < n; ++i) {
      for (std::uint64_t j = 0; j < n; ++j) a[i][j] = i != j;
    }
    p = a;
    for (std::uint64_t lambda = 1; lambda <= 6; ++lambda) {
      if (lambda > 1) {
        std::vector<std::vector<std::uint64_t>> next(n, std::vector<std::uint64_t>(n, 0));
        for (std::uint64_t i = 0; i < n; ++i) {
          for (std::uint64_t j = 0; j < n; ++j) {
            for (std::uint64_t k = 0; k < n; ++k) next[i][j] += p[i][k] * a[k][j];
          }
        }
        p = next;
      }
      std::uint64_t total = 0;
      for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t j = 0; j < n; ++j) total += i != j ? p[i][j] : 0;
      }
      CHECK(walk_offdiag(n, lambda) == p[0][1]);
      CHECK(walk_diag(n, lambda) == p[0][0]);
      CHECK(total_walks(n, lambda) == total);
    }
  }
  CHECK(total_walks(4, 2) == 24);
}

TEST_CASE("walk counts: recurrences and the diagonal gap") {
  for (std::uint64_t n = 2; n <= 8; ++n) {
    for (std::uint64_t lambda = 2; lambda <= 6; ++lambda) {
      const auto t = walk_offdiag(n, lambda), tp = walk_offdiag(n, lambda - 1);
      const auto d = walk_diag(n, lambda), dp = walk_diag(n, lambda - 1);
      CHECK(t == (n - 2) * tp + dp);
      CHECK(d == (n - 1) * tp);
    }
    for (std::uint64_t lambda = 1; lambda <= 6; ++lambda) {
      const auto t = static_cast<std::int64_t>(walk_offdiag(n, lambda));
      const auto d = static_cast<std::int64_t>(walk_diag(n, lambda));
      CHECK(d - t == (lambda % 2 == 0 ? 1 : -1));
    }
  }
}

TEST_CASE("walk counts detect overflow and bad input") {
  CHECK(code_of([] { walk_offdiag(1, 2); }) == Errc::invalid_argument);
  CHECK(code_of([] { walk_diag(3, 0); }) == Errc::invalid_argument);
  CHECK(code_of([] { total_walks(1u << 20, 5); }) == Errc::overflow);
  CHECK(walk_diag(1, 3) == 0);
}

TEST_CASE("betweenness CSV") {
  const auto csv = to_csv(betweenness_table(make_complete_graph(3), 1));
  CHECK(csv.rfind("node_id,sigma,kp_b,lb,estimated\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
