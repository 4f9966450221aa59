#include "roledyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "roledyn/errors.hpp"
#include "roledyn/parallel.hpp"

namespace roledyn {

GlobalFeatureSet union_features(std::span<const std::vector<FeatureDefinition>> per_timestep,
                                std::span<const std::size_t> timesteps) {
  if (per_timestep.empty()) throw ArgumentError("union_features needs at least one feature list");
  if (!timesteps.empty() && timesteps.size() != per_timestep.size())
    throw ArgumentError("union_features: timestep labels do not match the lists");
  GlobalFeatureSet out;
  std::map<FeatureDefinition, std::size_t> seen;
  for (std::size_t k = 0; k < per_timestep.size(); ++k) {
    const std::size_t t = timesteps.empty() ? k + 1 : timesteps[k];
    for (const auto& d : per_timestep[k]) {
      auto [it, inserted] = seen.try_emplace(d, out.defs.size());
      if (inserted) {
        out.defs.push_back(d);
        out.provenance.emplace_back();
      }
      auto& prov = out.provenance[it->second];
      if (prov.empty() || prov.back() != t) prov.push_back(t);
    }
  }
  return out;
}

StackedMatrix stack_global(std::span<const FeatureMatrix> matrices) {
  if (matrices.empty()) throw ArgumentError("stack_global needs at least one matrix");
  StackedMatrix out;
  out.defs = matrices.front().defs;
  std::size_t total = 0;
  for (const auto& m : matrices) {
    if (m.defs != out.defs)
      throw SchemaError("timestep " + std::to_string(m.timestep) + " does not share the global feature schema");
    total += m.rows();
  }
  out.values.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(out.defs.size()));
  out.rows.reserve(total);
  Eigen::Index offset = 0;
  for (const auto& m : matrices) {
    const auto n = static_cast<Eigen::Index>(m.rows());
    if (n > 0) out.values.middleRows(offset, n) = m.values;
    for (NodeId v : m.nodes) out.rows.push_back({m.timestep, v});
    offset += n;
  }
  return out;
}

RoleModel learn_global_roles(const StackedMatrix& stacked, std::size_t r_min, std::size_t r_max,
                             const MdlOptions& options) {
  RoleModel model = mdl_select_rank(stacked.values, r_min, r_max, options);
  model.feature_defs = stacked.defs;
  return model;
}

std::vector<MembershipMatrix> track_memberships(std::span<const FeatureMatrix> matrices, const RoleModel& model,
                                                std::size_t workers) {
  std::vector<MembershipMatrix> out(matrices.size());
  parallel_for(matrices.size(), workers, [&](std::size_t i) { out[i] = estimate_memberships(matrices[i], model); });
  return out;
}

RoleImportance role_importance(const MembershipMatrix& memberships, std::size_t rank) {
  RoleImportance out;
  out.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rank));
  if (memberships.rows() == 0) {
    out.empty = true;
    return out;
  }
  if (memberships.rank() != rank) throw SchemaError("role_importance: membership rank mismatch");
  out.values = memberships.values.colwise().sum().transpose() / static_cast<double>(memberships.rows());
  return out;
}

RoleImportanceSeries role_importance_series(std::span<const MembershipMatrix> memberships, std::size_t rank) {
  RoleImportanceSeries s;
  s.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(memberships.size()), static_cast<Eigen::Index>(rank));
  s.empty.resize(memberships.size());
  for (std::size_t t = 0; t < memberships.size(); ++t) {
    const auto& m = memberships[t];
    auto x = role_importance(m.normalized ? m : m.normalized_rows(), rank);
    s.values.row(static_cast<Eigen::Index>(t)) = x.values.transpose();
    s.empty[t] = x.empty;
  }
  return s;
}

std::size_t NodeTrajectory::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(memberships.begin(), memberships.end(), [](const auto& m) { return m.has_value(); }));
}

NodeTrajectory node_trajectory(std::span<const MembershipMatrix> memberships, NodeId node, std::size_t universe_size) {
  if (node >= universe_size) throw LookupError("node id " + std::to_string(node) + " is not in the node universe");
  NodeTrajectory tr;
  tr.node = node;
  tr.memberships.resize(memberships.size());
  for (std::size_t t = 0; t < memberships.size(); ++t) {
    const auto& m = memberships[t];
    auto it = std::lower_bound(m.nodes.begin(), m.nodes.end(), node);
    if (it != m.nodes.end() && *it == node)
      tr.memberships[t] = m.values.row(it - m.nodes.begin()).transpose();
  }
  return tr;
}

std::string_view to_string(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::Euclidean:
      return "euclidean";
    case DistanceMetric::Cosine:
      return "cosine";
    case DistanceMetric::Hellinger:
      return "hellinger";
  }
  return "hellinger";
}

DistanceMetric parse_distance_metric(std::string_view name) {
  if (name == "euclidean") return DistanceMetric::Euclidean;
  if (name == "cosine" || name == "cosine-distance") return DistanceMetric::Cosine;
  if (name == "hellinger") return DistanceMetric::Hellinger;
  throw ArgumentError("unknown distance metric '" + std::string(name) + "'");
}

double membership_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, DistanceMetric metric) {
  if (a.size() != b.size()) throw ArgumentError("distance between vectors of different length");
  switch (metric) {
    case DistanceMetric::Euclidean:
      return (a - b).norm();
    case DistanceMetric::Cosine: {
      const double na = a.norm(), nb = b.norm();
      if (na == 0 && nb == 0) return 0.0;
      if (na == 0 || nb == 0) return 1.0;
      return std::clamp(1.0 - a.dot(b) / (na * nb), 0.0, 2.0);
    }
    case DistanceMetric::Hellinger: {
      const double sa = a.sum(), sb = b.sum();
      if (sa == 0 && sb == 0) return 0.0;
      if (sa == 0 || sb == 0) return 1.0;
      const Eigen::VectorXd pa = (a / sa).cwiseMax(0.0).cwiseSqrt();
      const Eigen::VectorXd pb = (b / sb).cwiseMax(0.0).cwiseSqrt();
      return std::min(1.0, (pa - pb).norm() / std::sqrt(2.0));
    }
  }
  return 0.0;
}

ChangeScores behavior_change_score(const NodeTrajectory& trajectory, DistanceMetric metric) {
  if (trajectory.active_count() < 2)
    throw InsufficientDataError("node " + std::to_string(trajectory.node) + " has fewer than two active timesteps");
  auto normalize = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const double s = v.sum();
    return s > 0 ? Eigen::VectorXd(v / s) : v;
  };
  ChangeScores out;
  const std::size_t T = trajectory.memberships.size();
  out.score.resize(T);
  out.spans_gap.assign(T, false);
  std::optional<std::size_t> prev;
  bool have_max = false;
  for (std::size_t t = 0; t < T; ++t) {
    if (!trajectory.memberships[t]) continue;
    if (prev) {
      const double d = membership_distance(normalize(*trajectory.memberships[*prev]),
                                           normalize(*trajectory.memberships[t]), metric);
      out.score[t] = d;
      out.spans_gap[t] = t - *prev > 1;
      if (!have_max || d > out.max_score) {
        out.max_score = d;
        out.argmax_timestep = t + 1;
        have_max = true;
      }
    }
    prev = t;
  }
  return out;
}

namespace {

Eigen::MatrixXd max_normalized_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double mx = out.row(i).maxCoeff();
    if (mx > 0) out.row(i) /= mx;
  }
  return out;
}

}  // namespace

DistanceMatrix role_distance(const RoleModel& model, DistanceMetric metric) {
  const Eigen::MatrixXd rows = max_normalized_rows(model.basis);
  const auto r = rows.rows();
  DistanceMatrix d;
  d.axis = DistanceAxis::Role;
  d.values = Eigen::MatrixXd::Zero(r, r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = i + 1; j < r; ++j) {
      const double v = membership_distance(rows.row(i).transpose(), rows.row(j).transpose(), metric);
      d.values(i, j) = d.values(j, i) = v;
    }
  return d;
}

RefitResult refit_per_timestep(std::span<const FeatureMatrix> matrices, const RefitOptions& options) {
  RefitResult out;
  out.steps.resize(matrices.size());
  parallel_for(matrices.size(), options.workers, [&](std::size_t i) {
    const auto& V = matrices[i];
    RefitTimestep& step = out.steps[i];
    step.timestep = V.timestep;
    const std::size_t limit = std::min(V.rows(), V.cols());
    if (limit < 2) return;
    const std::size_t hi = std::min(options.r_max, limit - 1);
    const std::size_t lo = std::min(options.r_min, hi);
    step.model = mdl_select_rank(V.values, lo, hi, options.mdl);
    step.model.feature_defs = V.defs;
    step.skipped = false;
  });

  // Greedy one-to-one chaining against each track's most recent basis row.
  std::vector<Eigen::VectorXd> track_rows;
  for (auto& step : out.steps) {
    if (step.skipped) continue;
    const Eigen::MatrixXd rows = max_normalized_rows(step.model.basis);
    const auto r = static_cast<std::size_t>(rows.rows());
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t k = 0; k < r; ++k)
      for (std::size_t tr = 0; tr < track_rows.size(); ++tr)
        pairs.emplace_back((rows.row(static_cast<Eigen::Index>(k)).transpose() - track_rows[tr]).norm(), k, tr);
    std::sort(pairs.begin(), pairs.end());
    step.track_ids.assign(r, SIZE_MAX);
    std::vector<bool> track_used(track_rows.size(), false);
    for (const auto& [dist, k, tr] : pairs) {
      if (step.track_ids[k] != SIZE_MAX || track_used[tr]) continue;
      step.track_ids[k] = tr;
      track_used[tr] = true;
    }
    for (std::size_t k = 0; k < r; ++k) {
      if (step.track_ids[k] == SIZE_MAX) {
        step.track_ids[k] = track_rows.size();
        track_rows.emplace_back();
      }
      track_rows[step.track_ids[k]] = rows.row(static_cast<Eigen::Index>(k)).transpose();
    }
  }
  out.track_count = track_rows.size();
  out.memberships = refit_memberships(matrices, out.steps, out.track_count, options.workers);
  return out;
}

std::vector<MembershipMatrix> refit_memberships(std::span<const FeatureMatrix> matrices,
                                                std::span<const RefitTimestep> steps, std::size_t track_count,
                                                std::size_t workers) {
  if (steps.size() != matrices.size()) throw SchemaError("refit: one fitted step per timestep is required");
  std::vector<MembershipMatrix> out(matrices.size());
  parallel_for(matrices.size(), workers, [&](std::size_t i) {
    const auto& V = matrices[i];
    auto& m = out[i];
    m.timestep = V.timestep;
    m.nodes = V.nodes;
    m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(V.rows()), static_cast<Eigen::Index>(track_count));
    const auto& step = steps[i];
    if (step.skipped) return;
    const Eigen::MatrixXd local = estimate_memberships(V.values, step.model);
    for (std::size_t k = 0; k < step.track_ids.size(); ++k) {
      if (step.track_ids[k] >= track_count) throw SchemaError("refit: track id out of range");
      m.values.col(static_cast<Eigen::Index>(step.track_ids[k])) = local.col(static_cast<Eigen::Index>(k));
    }
  });
  return out;
}

}  // namespace roledyn
