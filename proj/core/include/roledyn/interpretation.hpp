#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "roledyn/roles.hpp"
#include "roledyn/temporal_graph.hpp"

namespace roledyn {

inline constexpr std::size_t kMeasureCount = 5;

/// Column order of every node-measure matrix.
inline constexpr std::array<std::string_view, kMeasureCount> kMeasureNames = {
    "betweenness", "biconnected components", "pagerank", "clustering coefficient", "degree"};

/// Brandes betweenness on the undirected simple projection, counting each
/// unordered pair once. Indexed by local node index.
Eigen::VectorXd betweenness_centrality(const SnapshotGraph& g);

/// Number of biconnected blocks containing each node (0 for isolated nodes).
Eigen::VectorXd biconnected_counts(const SnapshotGraph& g);

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-10;  // L1 change between iterates
  std::size_t max_iters = 10000;
};

/// Weighted, directed PageRank; dangling mass is spread uniformly.
/// Throws NumericalError if the iteration does not converge.
Eigen::VectorXd pagerank(const SnapshotGraph& g, const PageRankOptions& options = {});

/// One application of the PageRank transition, exposed for fixed-point checks.
Eigen::VectorXd pagerank_step(const SnapshotGraph& g, const Eigen::VectorXd& p, double damping = 0.85);

/// Local clustering on the undirected simple projection; 0 below degree 2.
Eigen::VectorXd clustering_coefficient(const SnapshotGraph& g);

struct MeasureOptions {
  bool normalize = true;                       // max-normalise each column
  std::size_t betweenness_node_cap = 50'000;   // larger snapshots get a zero column
  PageRankOptions pagerank;
};

struct NodeMeasureMatrix {
  std::size_t timestep = 0;
  std::vector<NodeId> nodes;
  Eigen::MatrixXd values;  // n_t × 5, normalised when `normalized`
  Eigen::MatrixXd raw;     // n_t × 5
  bool normalized = false;
  bool betweenness_omitted = false;
};

NodeMeasureMatrix compute_node_measures(const SnapshotGraph& g, const MeasureOptions& options = {});

struct RoleExplanation {
  std::vector<std::size_t> timesteps;      // timesteps whose fit entered the average
  std::vector<Eigen::MatrixXd> per_timestep;  // r × 5, aligned with `timesteps`
  std::vector<double> residuals;           // ‖G_t E_t − M_t‖_F, aligned with `timesteps`
  std::vector<std::size_t> skipped;        // timesteps with n_t < r
  Eigen::MatrixXd averaged;                // r × 5
};

/// Column-wise NNLS of M_t on G_t for each timestep, averaged over the
/// timesteps with n_t >= r. Throws InsufficientDataError if none qualifies.
RoleExplanation interpret_roles(std::span<const MembershipMatrix> memberships,
                                std::span<const NodeMeasureMatrix> measures, std::size_t workers = 1);

struct DominantMeasure {
  std::size_t column = 0;
  std::string_view name;
  bool degenerate = false;  // the maximum is shared (e.g. an all-zero row)
};

DominantMeasure dominant_measure(const RoleExplanation& explanation, std::size_t role);

/// CSV "role,measure,contribution" from the averaged matrix.
void write_explanation_csv(std::ostream& out, const RoleExplanation& explanation);
/// CSV "t,node,betweenness,...,degree" with the raw values.
void write_measure_csv(std::ostream& out, std::span<const NodeMeasureMatrix> measures, const NodeDictionary& nodes);

}  // namespace roledyn
