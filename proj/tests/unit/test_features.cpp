#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "roledyn/errors.hpp"
#include "roledyn/features.hpp"

using namespace roledyn;

namespace {

Eigen::VectorXd column(const FeatureMatrix& m, const FeatureDefinition& d) {
  for (std::size_t j = 0; j < m.cols(); ++j)
    if (m.defs[j] == d) return m.values.col(static_cast<Eigen::Index>(j));
  FAIL("missing column " << d.name());
  return {};
}

const FeatureDefinition kDeg{BaseFeature::TotalDegree, {}};

FeatureMatrix matrix_of(std::vector<std::vector<double>> cols, std::vector<FeatureDefinition> defs) {
  FeatureMatrix m;
  m.timestep = 1;
  const auto n = cols.front().size();
  for (std::size_t i = 0; i < n; ++i) m.nodes.push_back(static_cast<NodeId>(i));
  m.defs = std::move(defs);
  m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
  return m;
}

}  // namespace

TEST_CASE("base features: triangle") {
  auto g = oracle::directed({{0, 1}, {1, 2}, {0, 2}});
  auto m = base_features(g);
  CHECK(m.rows() == 3);
  CHECK(m.cols() == kUnweightedBaseCount);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(column(m, kDeg)[i] == 2);
    CHECK(column(m, {BaseFeature::EgoInternal, {}})[i] == 3);
    CHECK(column(m, {BaseFeature::EgoIncoming, {}})[i] == 0);
    CHECK(column(m, {BaseFeature::EgoOutgoing, {}})[i] == 0);
  }
}

TEST_CASE("base features: single directed edge") {
  auto m = base_features(oracle::directed({{0, 1}}));
  auto in = column(m, {BaseFeature::InDegree, {}});
  auto out = column(m, {BaseFeature::OutDegree, {}});
  CHECK(out[0] == 1);
  CHECK(in[0] == 0);
  CHECK(in[1] == 1);
  CHECK(out[1] == 0);
}

TEST_CASE("base features: egonet boundary on a directed path") {
  // 0 -> 1 -> 2 -> 3: egonet of 1 is {0,1,2}; 2->3 leaves it.
  auto m = base_features(oracle::directed({{0, 1}, {1, 2}, {2, 3}}));
  CHECK(column(m, {BaseFeature::EgoInternal, {}})[1] == 2);
  CHECK(column(m, {BaseFeature::EgoOutgoing, {}})[1] == 1);
  CHECK(column(m, {BaseFeature::EgoIncoming, {}})[1] == 0);
  CHECK(column(m, {BaseFeature::EgoIncoming, {}})[3] == 1);
}

TEST_CASE("base features: weighted variants only with non-unit weights") {
  SnapshotGraph g(1, {{0, 1, 2.0}, {1, 2, 1.0}});
  auto m = base_features(g);
  CHECK(m.cols() == kBaseFeatureCount);
  CHECK(column(m, {BaseFeature::WeightedTotalDegree, {}})[1] == 3.0);
  CHECK(column(m, {BaseFeature::WeightedEgoInternal, {}})[1] == 3.0);
}

TEST_CASE("base features: empty snapshot gives 0 rows") {
  auto m = base_features(SnapshotGraph(1, {}));
  CHECK(m.rows() == 0);
  CHECK(m.values.rows() == 0);
  CHECK(m.cols() == kUnweightedBaseCount);
}

TEST_CASE("recursive aggregate: path sums and means") {
  auto g = oracle::directed({{0, 1}, {1, 2}});
  auto base = base_features(g).select_columns(std::vector<std::size_t>{0});
  auto agg = recursive_aggregate(base, g);
  REQUIRE(agg.cols() == 3);
  CHECK(agg.defs[1].name() == "sum(total_degree)");
  CHECK(agg.defs[2].name() == "mean(total_degree)");
  CHECK(agg.values.col(1) == Eigen::Vector3d(2, 2, 2));
  CHECK(agg.values.col(2) == Eigen::Vector3d(2, 1, 2));
}

TEST_CASE("recursive aggregate: mean of a constant column is constant; zero neighbours give 0") {
  auto g = oracle::directed({{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}});
  FeatureMatrix c = base_features(g).select_columns(std::vector<std::size_t>{0});
  c.values.setConstant(7.0);
  auto agg = recursive_aggregate(c, g);
  CHECK((agg.values.col(2).array() == 7.0).all());

  std::vector<WeightedEdge> edges{{0, 0, 1.0}, {1, 2, 1.0}};
  SnapshotGraph loop(1, edges);  // node 0 is active through a self-loop only
  auto agg2 = recursive_aggregate(base_features(loop), loop);
  auto l0 = *loop.local_index(0);
  for (Eigen::Index j = static_cast<Eigen::Index>(kUnweightedBaseCount); j < agg2.values.cols(); ++j)
    CHECK(agg2.values(l0, j) == 0);
}

TEST_CASE("extract: chained sums on the path") {
  auto g = oracle::directed({{0, 1}, {1, 2}});
  std::vector<FeatureDefinition> defs{FeatureDefinition::parse("sum(sum(total_degree))"),
                                      FeatureDefinition::parse("sum(sum(sum(total_degree)))"), kDeg};
  auto m = extract_features(g, defs);
  CHECK(m.values.col(0) == Eigen::Vector3d(2, 4, 2));
  CHECK(m.values.col(1) == Eigen::Vector3d(4, 4, 4));
  CHECK(m.values.col(2) == Eigen::Vector3d(1, 2, 1));
  CHECK_THROWS_AS(extract_features(g, {}), ArgumentError);
}

TEST_CASE("definitions: canonical names round-trip") {
  auto d = FeatureDefinition{BaseFeature::EgoIncoming, {Aggregator::Mean, Aggregator::Sum}};
  CHECK(d.name() == "sum(mean(ego_incoming))");
  CHECK(d.generation() == 2);
  CHECK(FeatureDefinition::parse(d.name()) == d);
  CHECK(kDeg.generation() == 0);
  CHECK_THROWS_AS(FeatureDefinition::parse("max(total_degree)"), DefinitionError);
  CHECK_THROWS_AS(FeatureDefinition::parse("eccentricity"), DefinitionError);
  CHECK_THROWS_AS(FeatureDefinition::parse("sum(total_degree"), DefinitionError);
}

TEST_CASE("log binning: bottom fraction first, ties share a bin") {
  std::vector<double> a{1, 2, 3}, b{10, 20, 30}, c{3, 2, 1};
  CHECK(log_bin(a, 0.5, 2) == log_bin(b, 0.5, 2));
  CHECK(log_bin(a, 0.5, 2) != log_bin(c, 0.5, 2));
  CHECK(log_bin(a, 0.5, 2) == std::vector<std::uint32_t>{0, 0, 1});
  std::vector<double> ties{5, 5, 5, 5, 1};
  auto bins = log_bin(ties, 0.5, 3);
  CHECK(bins[4] == 0);
  CHECK(bins[0] == bins[3]);
  CHECK(derived_bin_count(1, 0.5) == 2);
  CHECK(derived_bin_count(8, 0.5) == 4);  // 4, 2, 1, 1
}

TEST_CASE("prune: duplicates collapse, disagreeing columns survive") {
  const FeatureDefinition s = kDeg.extended(Aggregator::Sum);
  auto dup = prune_features(matrix_of({{1, 2, 3}, {1, 2, 3}}, {s, kDeg}), 2);
  REQUIRE(dup.cols() == 1);
  CHECK(dup.defs[0] == kDeg);  // lower generation wins

  auto scaled = prune_features(matrix_of({{1, 2, 3}, {10, 20, 30}}, {kDeg, s}), 2);
  CHECK(scaled.cols() == 1);
  auto reversed = prune_features(matrix_of({{1, 2, 3}, {3, 2, 1}}, {kDeg, s}), 2);
  CHECK(reversed.cols() == 2);
  CHECK_THROWS_AS(prune_features(reversed, 1), ArgumentError);
}

TEST_CASE("prune: equal generations keep the earliest column") {
  const FeatureDefinition a{BaseFeature::InDegree, {}}, b{BaseFeature::OutDegree, {}};
  auto m = prune_features(matrix_of({{4, 5, 6}, {1, 2, 3}}, {b, a}), 2);
  REQUIRE(m.cols() == 1);
  CHECK(m.defs[0] == b);
}

TEST_CASE("prune soundness: every dropped column is bin-identical to a kept one") {
  std::mt19937_64 rng(3);
  auto g = oracle::undirected(oracle::random_graph(30, 0.15, rng));
  auto candidates = recursive_aggregate(base_features(g), g);
  const auto s = derived_bin_count(candidates.rows(), 0.5);
  auto kept = prune_features(candidates, s);
  std::set<std::vector<std::uint32_t>> kept_bins;
  auto bins_of = [&](const FeatureMatrix& m, std::size_t j) {
    Eigen::VectorXd c = m.values.col(static_cast<Eigen::Index>(j));
    return log_bin(std::span<const double>(c.data(), static_cast<std::size_t>(c.size())), 0.5, s);
  };
  for (std::size_t j = 0; j < kept.cols(); ++j) CHECK(kept_bins.insert(bins_of(kept, j)).second);
  for (std::size_t j = 0; j < candidates.cols(); ++j) CHECK(kept_bins.count(bins_of(candidates, j)) == 1);
}

TEST_CASE("learn: regular graph converges to few features") {
  oracle::Pairs cycle;
  for (int i = 0; i < 8; ++i) cycle.emplace_back(i, (i + 1) % 8);
  auto learned = learn_features(oracle::directed(cycle));
  CHECK(learned.defs.size() <= 2);
  CHECK_FALSE(learned.hit_depth_cap);
}

TEST_CASE("learn: star separates hub from leaves") {
  auto learned = learn_features(oracle::directed({{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}}));
  auto hub = *oracle::directed({{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}}).local_index(0);
  bool differs = false;
  for (Eigen::Index i = 0; i < learned.matrix.values.rows(); ++i)
    if (i != hub && learned.matrix.values.row(i) != learned.matrix.values.row(hub)) differs = true;
  CHECK(differs);
  CHECK_THROWS_AS(learn_features(SnapshotGraph(1, {})), ArgumentError);
}

TEST_CASE("learn: monotone growth, determinism and exact re-extraction") {
  std::mt19937_64 rng(11);
  auto g = oracle::undirected(oracle::random_graph(40, 0.1, rng));
  auto a = learn_features(g);
  auto b = learn_features(g);
  CHECK(a.defs == b.defs);
  CHECK(a.matrix.values == b.matrix.values);
  auto again = extract_features(g, a.defs);
  CHECK(again.values == a.matrix.values);
  CHECK(again.nodes == a.matrix.nodes);
  for (std::size_t j = 1; j < a.defs.size(); ++j) CHECK(a.defs[j - 1].generation() <= a.defs[j].generation());
}

TEST_CASE("learn: depth cap stops recursion") {
  std::mt19937_64 rng(5);
  auto g = oracle::undirected(oracle::random_graph(60, 0.08, rng));
  LearnOptions o;
  o.max_depth = 1;
  auto capped = learn_features(g, o);
  for (const auto& d : capped.defs) CHECK(d.generation() <= 1);
  o.max_depth = 0;
  for (const auto& d : learn_features(g, o).defs) CHECK(d.generation() == 0);
}

TEST_CASE("work counter grows linearly with edges") {
  auto visits = [](std::size_t m) {
    std::mt19937_64 rng(m);
    std::uniform_int_distribution<int> node(0, static_cast<int>(m / 2) - 1);
    std::set<std::pair<int, int>> seen;
    std::vector<WeightedEdge> edges;
    while (edges.size() < m) {
      int u = node(rng), v = node(rng);
      if (u == v || !seen.insert({u, v}).second) continue;
      edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), 1.0});
    }
    SnapshotGraph g(1, std::move(edges));
    WorkCounter w;
    auto base = base_features(g, &w);
    recursive_aggregate(base, g, &w);
    return static_cast<double>(w.edge_visits);
  };
  const double a = visits(4000), b = visits(8000), c = visits(16000);
  CHECK(b / a == doctest::Approx(2.0).epsilon(0.15));
  CHECK(c / b == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("serialization: JSON definitions and CSV matrices round-trip") {
  std::vector<FeatureDefinition> defs{kDeg, FeatureDefinition::parse("mean(sum(ego_outgoing))"),
                                      FeatureDefinition::parse("weighted_in_degree")};
  CHECK(feature_definitions_from_json(feature_definitions_to_json(defs)) == defs);
  CHECK_THROWS_AS(feature_definitions_from_json("[{\"name\": \"x\", \"base\": \"nope\", \"chain\": []}]"),
                  DefinitionError);

  NodeDictionary nodes;
  for (auto l : {"a", "b,c", "d"}) nodes.intern(l);
  auto g1 = SnapshotGraph(1, {{0, 1, 1.0}, {1, 2, 0.5}});
  auto g2 = SnapshotGraph(2, {{2, 0, 3.0}});
  std::vector<FeatureMatrix> ms{extract_features(g1, defs), extract_features(g2, defs),
                                extract_features(SnapshotGraph(3, {}), defs)};
  std::ostringstream out;
  write_feature_csv(out, ms, nodes);
  std::istringstream in(out.str());
  auto back = read_feature_csv(in, nodes, 3);
  REQUIRE(back.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(back[t].defs == defs);
    CHECK(back[t].nodes == ms[t].nodes);
    CHECK(back[t].values == ms[t].values);
  }
}
