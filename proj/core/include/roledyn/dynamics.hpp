#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "roledyn/features.hpp"
#include "roledyn/roles.hpp"

namespace roledyn {

/// Deduplicated union of per-timestep feature sets, in first-discovery order.
struct GlobalFeatureSet {
  std::vector<FeatureDefinition> defs;
  /// provenance[i] lists the timesteps whose own learning produced defs[i].
  std::vector<std::vector<std::size_t>> provenance;
};

/// `timesteps[k]` labels `per_timestep[k]`; when empty, labels are 1..k.
GlobalFeatureSet union_features(std::span<const std::vector<FeatureDefinition>> per_timestep,
                                std::span<const std::size_t> timesteps = {});

struct RowProvenance {
  std::size_t timestep = 0;
  NodeId node = 0;
  friend bool operator==(const RowProvenance&, const RowProvenance&) = default;
};

/// All timesteps' node-by-feature rows stacked vertically.
struct StackedMatrix {
  Eigen::MatrixXd values;
  std::vector<FeatureDefinition> defs;
  std::vector<RowProvenance> rows;
};

StackedMatrix stack_global(std::span<const FeatureMatrix> matrices);

/// MDL rank selection on the stacked matrix; the returned model carries the
/// stacked column definitions.
RoleModel learn_global_roles(const StackedMatrix& stacked, std::size_t r_min, std::size_t r_max,
                             const MdlOptions& options = {});

/// Raw memberships per timestep against a fixed basis; order follows input.
std::vector<MembershipMatrix> track_memberships(std::span<const FeatureMatrix> matrices, const RoleModel& model,
                                                std::size_t workers = 1);

struct RoleImportance {
  Eigen::VectorXd values;
  bool empty = false;  // no active nodes; values are all zero
};

/// x_t = G_tᵀ·1 / n_t over the rows given (callers pass normalised rows).
RoleImportance role_importance(const MembershipMatrix& memberships, std::size_t rank);

struct RoleImportanceSeries {
  Eigen::MatrixXd values;   // t_max × r, row t-1 = x_t
  std::vector<bool> empty;  // per timestep
};

/// Normalises each timestep's rows before averaging.
RoleImportanceSeries role_importance_series(std::span<const MembershipMatrix> memberships, std::size_t rank);

struct NodeTrajectory {
  NodeId node = 0;
  /// Index t-1; nullopt marks an inactive timestep.
  std::vector<std::optional<Eigen::VectorXd>> memberships;

  std::size_t active_count() const;
};

NodeTrajectory node_trajectory(std::span<const MembershipMatrix> memberships, NodeId node,
                               std::size_t universe_size);

enum class DistanceMetric { Euclidean, Cosine, Hellinger };

std::string_view to_string(DistanceMetric m);
DistanceMetric parse_distance_metric(std::string_view name);

/// Cosine distance treats two zero vectors as identical and a zero vs.
/// non-zero pair as maximally distant. Hellinger rescales both inputs to sum 1.
double membership_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, DistanceMetric metric);

struct ChangeScores {
  /// Index t-1; set for every active timestep that has an earlier active one.
  std::vector<std::optional<double>> score;
  /// True where the compared timesteps are separated by inactivity.
  std::vector<bool> spans_gap;
  std::size_t argmax_timestep = 0;  // 1-based; earliest on ties
  double max_score = 0;
};

/// Distances between consecutive active, row-normalised memberships.
/// Throws InsufficientDataError with fewer than two active timesteps.
ChangeScores behavior_change_score(const NodeTrajectory& trajectory, DistanceMetric metric);

enum class DistanceAxis { Role, Node, Time };

struct DistanceMatrix {
  DistanceAxis axis = DistanceAxis::Role;
  Eigen::MatrixXd values;
};

/// Pairwise distances between the basis rows, each scaled to unit maximum.
DistanceMatrix role_distance(const RoleModel& model, DistanceMetric metric);

struct RefitOptions {
  std::size_t r_min = 1;
  std::size_t r_max = 8;
  MdlOptions mdl;
  std::size_t workers = 1;
};

struct RefitTimestep {
  std::size_t timestep = 0;
  bool skipped = true;  // too few rows or columns to fit any rank
  RoleModel model;
  std::vector<std::size_t> track_ids;  // role k at this timestep -> track id
};

/// Roles refitted independently per timestep, chained across time by greedy
/// minimum basis-row distance. The chaining is a heuristic.
struct RefitResult {
  std::vector<RefitTimestep> steps;
  std::size_t track_count = 0;
  /// Raw memberships with columns re-indexed by track id.
  std::vector<MembershipMatrix> memberships;
};

RefitResult refit_per_timestep(std::span<const FeatureMatrix> matrices, const RefitOptions& options);

/// Memberships under already fitted per-timestep models, re-indexed by track id.
std::vector<MembershipMatrix> refit_memberships(std::span<const FeatureMatrix> matrices,
                                                std::span<const RefitTimestep> steps, std::size_t track_count,
                                                std::size_t workers = 1);

}  // namespace roledyn
