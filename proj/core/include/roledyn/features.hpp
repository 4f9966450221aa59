#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "roledyn/temporal_graph.hpp"

namespace roledyn {

/// Structural base measurements. Degree counts distinct arcs after binning;
/// egonet counts refer to the subgraph induced on a node and its neighbours.
/// Total degree is first so it is the preferred representative when pruning.
enum class BaseFeature : std::uint8_t {
  TotalDegree,
  InDegree,
  OutDegree,
  EgoInternal,
  EgoIncoming,
  EgoOutgoing,
  WeightedTotalDegree,
  WeightedInDegree,
  WeightedOutDegree,
  WeightedEgoInternal,
  WeightedEgoIncoming,
  WeightedEgoOutgoing,
};

inline constexpr std::size_t kUnweightedBaseCount = 6;
inline constexpr std::size_t kBaseFeatureCount = 12;

std::string_view to_string(BaseFeature f);
BaseFeature parse_base_feature(std::string_view name);  // throws DefinitionError

enum class Aggregator : std::uint8_t { Sum, Mean };

std::string_view to_string(Aggregator a);

/// A recursive feature recipe: a base measurement followed by neighbour
/// aggregations applied in chain order (chain.front() is applied first).
struct FeatureDefinition {
  BaseFeature base = BaseFeature::TotalDegree;
  std::vector<Aggregator> chain;

  std::size_t generation() const noexcept { return chain.size(); }
  FeatureDefinition extended(Aggregator a) const;

  /// Canonical form, e.g. "sum(mean(total_degree))".
  std::string name() const;
  static FeatureDefinition parse(std::string_view name);  // throws DefinitionError

  friend bool operator==(const FeatureDefinition&, const FeatureDefinition&) = default;
  friend auto operator<=>(const FeatureDefinition&, const FeatureDefinition&) = default;
};

/// Node-by-feature matrix for one snapshot. Rows follow active_nodes() order.
struct FeatureMatrix {
  std::size_t timestep = 0;
  std::vector<NodeId> nodes;
  std::vector<FeatureDefinition> defs;
  Eigen::MatrixXd values;

  std::size_t rows() const noexcept { return nodes.size(); }
  std::size_t cols() const noexcept { return defs.size(); }
  FeatureMatrix select_columns(std::span<const std::size_t> columns) const;
};

/// Counts adjacency entries touched, for checking edge-linear work.
struct WorkCounter {
  std::uint64_t edge_visits = 0;
};

/// Degree and egonet features; weighted variants only when the snapshot
/// carries a weight other than 1.
FeatureMatrix base_features(const SnapshotGraph& snapshot, WorkCounter* work = nullptr);

/// Returns `V` followed by one candidate column per (column, aggregator)
/// pair, in column-major order: sum(c0), mean(c0), sum(c1), ... Neighbours
/// are the union of in- and out-neighbours; the mean over none is 0.
FeatureMatrix recursive_aggregate(const FeatureMatrix& V, const SnapshotGraph& snapshot,
                                  WorkCounter* work = nullptr);

/// Vertical logarithmic binning: the `fraction` of nodes with the lowest
/// values go to bin 0, the same fraction of the remainder to bin 1, and so on;
/// the last of `max_bins` bins takes everything left. Tied values always
/// share a bin.
std::vector<std::uint32_t> log_bin(std::span<const double> column, double fraction, std::size_t max_bins);

/// Number of bins needed before the fraction rule exhausts `rows` nodes.
std::size_t derived_bin_count(std::size_t rows, double fraction);

struct PruneOptions {
  double fraction = 0.5;
  std::size_t bins = 0;  // 0 derives the count from the row count
};

/// Keeps one column per group of columns whose binned values agree on every
/// node, preferring the lowest generation and then the earliest column.
FeatureMatrix prune_features(const FeatureMatrix& candidates, const PruneOptions& options = {});
FeatureMatrix prune_features(const FeatureMatrix& candidates, std::size_t bins);

struct LearnOptions {
  PruneOptions prune;
  std::size_t max_depth = 6;
};

struct LearnedFeatures {
  std::vector<FeatureDefinition> defs;
  FeatureMatrix matrix;
  std::size_t iterations = 0;
  bool hit_depth_cap = false;
};

/// Alternates aggregation and pruning from the base features until an
/// iteration retains nothing new.
LearnedFeatures learn_features(const SnapshotGraph& snapshot, const LearnOptions& options = {},
                               WorkCounter* work = nullptr);

/// Evaluates exactly `defs` on the snapshot.
FeatureMatrix extract_features(const SnapshotGraph& snapshot, std::span<const FeatureDefinition> defs,
                               WorkCounter* work = nullptr);

std::string feature_definitions_to_json(std::span<const FeatureDefinition> defs);
std::vector<FeatureDefinition> feature_definitions_from_json(std::string_view json);

/// CSV with header "t,node,<definition names...>" and one row per active
/// node per timestep. Values use shortest round-trip formatting.
void write_feature_csv(std::ostream& out, std::span<const FeatureMatrix> matrices, const NodeDictionary& nodes);
/// Returns one matrix per timestep 1..t_max (empty timesteps get 0 rows).
std::vector<FeatureMatrix> read_feature_csv(std::istream& in, const NodeDictionary& nodes, std::size_t t_max);

}  // namespace roledyn
