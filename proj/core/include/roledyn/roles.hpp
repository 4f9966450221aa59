#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "roledyn/features.hpp"
#include "roledyn/nmf.hpp"

namespace roledyn {

enum class MdlErrorModel { SquaredError, KlDivergence };

std::string_view to_string(MdlErrorModel m);
MdlErrorModel parse_mdl_error_model(std::string_view name);

struct MdlOptions {
  std::size_t bits = 4;             // bits per quantised model value
  MdlErrorModel error_model = MdlErrorModel::SquaredError;
  std::size_t precision_bits = 16;  // residual precision relative to max(V)
  std::size_t restarts = 3;
  std::size_t lloyd_iters = 100;
  bool scale_columns = true;  // factor V with every column scaled to unit max
  NmfOptions nmf;
  std::size_t workers = 1;
};

/// Description length of one candidate rank.
struct MdlScore {
  std::size_t rank = 0;
  double model_bits = 0;
  double error_bits = 0;
  double objective = 0;  // best NMF objective on the (scaled) input

  double total() const { return model_bits + error_bits; }
};

/// Role-by-feature basis plus the bookkeeping needed to reuse it.
struct RoleModel {
  Eigen::MatrixXd basis;  // rank × f, in original (unscaled) feature units
  std::vector<FeatureDefinition> feature_defs;
  /// Per-feature divisor used while fitting; memberships are estimated in
  /// the same scaled space. All ones when no scaling was applied.
  Eigen::VectorXd column_scale;
  std::vector<MdlScore> mdl_trace;

  std::size_t rank() const noexcept { return static_cast<std::size_t>(basis.rows()); }
  std::size_t feature_count() const noexcept { return static_cast<std::size_t>(basis.cols()); }
};

/// Lloyd (1-D k-means) scalar quantisation to `levels` values. Returns the
/// reconstruction of every input entry.
Eigen::MatrixXd lloyd_quantize(const Eigen::MatrixXd& values, std::size_t levels, std::size_t max_iters = 100);

/// Scores a fitted factorisation of V by quantising G and F to 2^bits levels.
MdlScore mdl_score(const Eigen::MatrixXd& V, const Eigen::MatrixXd& G, const Eigen::MatrixXd& F,
                   const MdlOptions& options);

/// Fits every rank in [r_min, r_max] (best of `restarts` NMF runs each) and
/// returns the one with the smallest description length; ties go to the
/// smaller rank. Requires 1 <= r_min <= r_max < min(rows, cols).
RoleModel mdl_select_rank(const Eigen::MatrixXd& V, std::size_t r_min, std::size_t r_max,
                          const MdlOptions& options = {});

/// Per-row memberships for one timestep.
struct MembershipMatrix {
  std::size_t timestep = 0;
  std::vector<NodeId> nodes;
  Eigen::MatrixXd values;  // n_t × r
  bool normalized = false;

  std::size_t rows() const noexcept { return nodes.size(); }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(values.cols()); }
  /// Rows rescaled to sum to 1; all-zero rows stay zero.
  MembershipMatrix normalized_rows() const;
};

/// min_{G>=0} ‖(V − G·F) D⁻¹‖²_F row by row, with D = model.column_scale.
Eigen::MatrixXd estimate_memberships(const Eigen::MatrixXd& V, const RoleModel& model);

/// Reconciles V's columns with the model's definitions (absent columns are
/// zero-filled) and estimates raw memberships. Throws SchemaError when V has
/// a column the model does not know.
MembershipMatrix estimate_memberships(const FeatureMatrix& V, const RoleModel& model);

std::string role_model_to_json(const RoleModel& model);
RoleModel role_model_from_json(std::string_view json);

/// CSV "node,t,role_0,...,role_{r-1}" (RFC 4180).
void write_membership_csv(std::ostream& out, std::span<const MembershipMatrix> memberships,
                          const NodeDictionary& nodes);
/// One matrix per timestep 1..t_max.
std::vector<MembershipMatrix> read_membership_csv(std::istream& in, const NodeDictionary& nodes, std::size_t t_max,
                                                  bool normalized);

}  // namespace roledyn
