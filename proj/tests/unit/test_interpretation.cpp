#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "roledyn/errors.hpp"
#include "roledyn/interpretation.hpp"

using namespace roledyn;

namespace {

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Maps oracle node order (0..n-1) onto the snapshot's local order.
Eigen::VectorXd by_label(const SnapshotGraph& g, const Eigen::VectorXd& local, int n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < g.node_count(); ++i) out[static_cast<Eigen::Index>(g.active_nodes()[i])] = local[i];
  return out;
}

MembershipMatrix membership(std::size_t t, Eigen::MatrixXd values) {
  MembershipMatrix m;
  m.timestep = t;
  m.values = std::move(values);
  m.nodes.resize(static_cast<std::size_t>(m.values.rows()));
  std::iota(m.nodes.begin(), m.nodes.end(), 0);
  return m;
}

NodeMeasureMatrix measures(std::size_t t, Eigen::MatrixXd values) {
  NodeMeasureMatrix m;
  m.timestep = t;
  m.values = values;
  m.raw = std::move(values);
  m.nodes.resize(static_cast<std::size_t>(m.values.rows()));
  std::iota(m.nodes.begin(), m.nodes.end(), 0);
  return m;
}

}  // namespace

TEST_CASE("measures: triangle, path and 4-cycle") {
  auto tri = oracle::undirected({{0, 1}, {1, 2}, {0, 2}});
  CHECK(clustering_coefficient(tri) == Eigen::Vector3d::Ones());
  CHECK(betweenness_centrality(tri).isZero(0));
  CHECK(biconnected_counts(tri) == Eigen::Vector3d::Ones());

  auto path = oracle::undirected({{0, 1}, {1, 2}});
  CHECK(betweenness_centrality(path) == Eigen::Vector3d(0, 1, 0));
  CHECK(biconnected_counts(path) == Eigen::Vector3d(1, 2, 1));
  CHECK(clustering_coefficient(path).isZero(0));

  auto c4 = oracle::undirected({{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  auto p = pagerank(c4);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("measures: directed input uses its undirected projection for betweenness") {
  auto g = oracle::directed({{0, 1}, {2, 1}});
  CHECK(betweenness_centrality(g) == Eigen::Vector3d(0, 1, 0));
  auto m = compute_node_measures(g, {false});
  CHECK(m.raw.col(4) == Eigen::Vector3d(1, 2, 1));
}

TEST_CASE("betweenness and block counts match brute force on all graphs up to 5 nodes") {
  std::size_t checked = 0;
  for (int n = 2; n <= 5; ++n)
    for (const auto& pairs : oracle::all_graphs(n)) {
      if (!oracle::connected(n, pairs)) continue;
      auto g = oracle::undirected(pairs);
      CHECK((by_label(g, betweenness_centrality(g), n) - to_vec(oracle::betweenness(n, pairs))).cwiseAbs().maxCoeff() <
            1e-9);
      CHECK(by_label(g, biconnected_counts(g), n) == to_vec(oracle::block_counts(n, pairs)));
      ++checked;
    }
  CHECK(checked == 1 + 4 + 38 + 728);
}

TEST_CASE("betweenness and block counts on random graphs up to 8 nodes, including disconnected") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 6 + trial % 3;
    auto pairs = oracle::random_graph(n, 0.2 + 0.1 * (trial % 5), rng);
    if (pairs.empty()) continue;
    auto g = oracle::undirected(pairs);
    auto bc = betweenness_centrality(g);
    auto bl = biconnected_counts(g);
    auto want_bc = to_vec(oracle::betweenness(n, pairs));
    auto want_bl = to_vec(oracle::block_counts(n, pairs));
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      auto v = static_cast<Eigen::Index>(g.active_nodes()[i]);
      CHECK(bc[static_cast<Eigen::Index>(i)] == doctest::Approx(want_bc[v]).epsilon(1e-9));
      CHECK(bl[static_cast<Eigen::Index>(i)] == want_bl[v]);
    }
  }
}

TEST_CASE("pagerank: distribution, fixed point, dangling nodes, weights") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    oracle::Pairs arcs;
    std::uniform_int_distribution<int> node(0, 11);
    for (int e = 0; e < 25; ++e) {
      int u = node(rng), v = node(rng);
      if (u != v && std::find(arcs.begin(), arcs.end(), std::make_pair(u, v)) == arcs.end()) arcs.emplace_back(u, v);
    }
    auto g = oracle::directed(arcs);
    auto p = pagerank(g);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((p.array() > 0).all());
    CHECK((p - pagerank_step(g, p)).lpNorm<1>() < 1e-9);
  }
  // Two-node chain: the sink collects the walk's mass.
  auto chain = oracle::directed({{0, 1}});
  auto p = pagerank(chain);
  CHECK(p[1] > p[0]);
  // p0 = (1-d)/2 + d*p1/2, p1 = (1-d)/2 + d*(p0 + p1/2); the sink's mass is spread uniformly.
  const double d = 0.85;
  Eigen::Matrix2d A;
  A << 1, -d / 2, -d, 1 - d / 2;
  Eigen::Vector2d want = A.lu().solve(Eigen::Vector2d::Constant((1 - d) / 2));
  CHECK(p[0] == doctest::Approx(want[0] / want.sum()).epsilon(1e-9));

  SnapshotGraph heavy(1, {{0, 1, 9.0}, {0, 2, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}});
  auto ph = pagerank(heavy);
  CHECK(ph[1] > ph[2]);
}

TEST_CASE("clustering coefficient lies in [0, 1] and is 1 on cliques") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    auto pairs = oracle::random_graph(9, 0.4, rng);
    if (pairs.empty()) continue;
    auto cc = clustering_coefficient(oracle::undirected(pairs));
    CHECK((cc.array() >= 0).all());
    CHECK((cc.array() <= 1).all());
  }
  for (int n = 3; n <= 7; ++n) {
    oracle::Pairs k;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) k.emplace_back(u, v);
    CHECK(clustering_coefficient(oracle::undirected(k)).isOnes(1e-15));
  }
}

TEST_CASE("compute_node_measures: normalisation, raw values, size guard") {
  auto g = oracle::undirected({{0, 1}, {1, 2}, {2, 3}, {1, 3}, {3, 4}});
  auto m = compute_node_measures(g);
  CHECK(m.normalized);
  CHECK(m.values.rows() == 5);
  CHECK(m.values.cols() == 5);
  for (Eigen::Index j = 0; j < 5; ++j) CHECK(m.values.col(j).maxCoeff() == doctest::Approx(1.0));
  CHECK(m.raw.col(2).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.raw.col(4) == Eigen::VectorXd((Eigen::VectorXd(5) << 2, 6, 4, 6, 2).finished()));
  CHECK((m.values.array() >= 0).all());

  MeasureOptions cap;
  cap.betweenness_node_cap = 3;
  auto capped = compute_node_measures(g, cap);
  CHECK(capped.betweenness_omitted);
  CHECK(capped.raw.col(0).isZero(0));

  SnapshotGraph empty(1, {});
  CHECK(compute_node_measures(empty).values.rows() == 0);
}

TEST_CASE("interpret_roles: identity memberships reproduce M") {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd M = oracle::uniform(3, 5, rng);
  std::vector<MembershipMatrix> G{membership(1, Eigen::MatrixXd::Identity(3, 3))};
  std::vector<NodeMeasureMatrix> Ms{measures(1, M)};
  auto e = interpret_roles(G, Ms);
  CHECK((e.averaged - M).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(e.residuals[0] < 1e-12);
}

TEST_CASE("interpret_roles: planted E, averaged over time, skipped timesteps") {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd E = oracle::uniform(3, 5, rng);
  Eigen::MatrixXd G1 = oracle::uniform(12, 3, rng), G2 = oracle::uniform(15, 3, rng);
  std::vector<MembershipMatrix> G{membership(1, G1), membership(2, G2), membership(3, Eigen::MatrixXd::Ones(2, 3))};
  std::vector<NodeMeasureMatrix> Ms{measures(1, G1 * E), measures(2, G2 * (2 * E)), measures(3, Eigen::MatrixXd::Ones(2, 5))};
  auto e = interpret_roles(G, Ms, 2);
  REQUIRE(e.per_timestep.size() == 2);
  CHECK((e.per_timestep[0] - E).norm() / E.norm() < 1e-4);
  CHECK((e.averaged - 1.5 * E).norm() / E.norm() < 1e-4);
  CHECK(e.skipped == std::vector<std::size_t>{3});
  CHECK(e.timesteps == std::vector<std::size_t>{1, 2});

  std::vector<MembershipMatrix> few{membership(1, Eigen::MatrixXd::Ones(2, 3))};
  std::vector<NodeMeasureMatrix> few_m{measures(1, Eigen::MatrixXd::Ones(2, 5))};
  CHECK_THROWS_AS(interpret_roles(few, few_m), InsufficientDataError);

  auto shuffled = Ms;
  std::swap(shuffled[0].nodes[0], shuffled[0].nodes[1]);
  CHECK_THROWS_AS(interpret_roles(G, shuffled), SchemaError);
}

TEST_CASE("interpret_roles: residual bound and column-scaling covariance") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd Gm = oracle::uniform(10, 3, rng), M = oracle::uniform(10, 5, rng);
    std::vector<MembershipMatrix> G{membership(1, Gm)};
    std::vector<NodeMeasureMatrix> Ms{measures(1, M)};
    auto e = interpret_roles(G, Ms);
    CHECK(e.residuals[0] <= M.norm() + 1e-12);
    CHECK((e.averaged.array() >= 0).all());
    CHECK(e.residuals[0] == doctest::Approx((Gm * e.per_timestep[0] - M).norm()));

    Ms[0].values.col(2) *= 7.0;
    auto scaled = interpret_roles(G, Ms);
    CHECK((scaled.averaged.col(2) - 7.0 * e.averaged.col(2)).norm() < 1e-8 * (1 + e.averaged.norm()));
    CHECK((scaled.averaged.col(0) - e.averaged.col(0)).norm() < 1e-12);
  }
}

TEST_CASE("dominant_measure: unique max, zero row, planted argmax") {
  RoleExplanation e;
  e.averaged = Eigen::MatrixXd::Zero(3, 5);
  e.averaged(0, 2) = 1;
  e.averaged(2, 3) = 0.9;
  e.averaged(2, 0) = 0.4;
  auto d0 = dominant_measure(e, 0);
  CHECK(d0.name == "pagerank");
  CHECK_FALSE(d0.degenerate);
  auto d1 = dominant_measure(e, 1);
  CHECK(d1.column == 0);
  CHECK(d1.name == "betweenness");
  CHECK(d1.degenerate);
  CHECK(dominant_measure(e, 2).name == "clustering coefficient");
  CHECK_THROWS_AS(dominant_measure(e, 3), LookupError);
}

TEST_CASE("explanation and measure CSV layout") {
  RoleExplanation e;
  e.averaged = Eigen::MatrixXd::Constant(2, 5, 0.5);
  std::ostringstream out;
  write_explanation_csv(out, e);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "role,measure,contribution");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 10);

  NodeDictionary nodes;
  nodes.intern("a");
  nodes.intern("b");
  std::vector<NodeMeasureMatrix> ms{compute_node_measures(oracle::undirected({{0, 1}}))};
  std::ostringstream mout;
  write_measure_csv(mout, ms, nodes);
  CHECK(mout.str().rfind("t,node,betweenness,", 0) == 0);
  CHECK(mout.str().find("\n1,a,") != std::string::npos);
}
