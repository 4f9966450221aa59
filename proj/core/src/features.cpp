#include "roledyn/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "roledyn/errors.hpp"
#include "roledyn/text.hpp"

namespace roledyn {

namespace {

constexpr std::array<std::string_view, kBaseFeatureCount> kBaseNames = {
    "total_degree",          "in_degree",          "out_degree",          "ego_internal",
    "ego_incoming",          "ego_outgoing",       "weighted_total_degree", "weighted_in_degree",
    "weighted_out_degree",   "weighted_ego_internal", "weighted_ego_incoming", "weighted_ego_outgoing",
};

void count(WorkCounter* work, std::uint64_t n) {
  if (work) work->edge_visits += n;
}

}  // namespace

std::string_view to_string(BaseFeature f) { return kBaseNames[static_cast<std::size_t>(f)]; }

BaseFeature parse_base_feature(std::string_view name) {
  for (std::size_t i = 0; i < kBaseNames.size(); ++i)
    if (kBaseNames[i] == name) return static_cast<BaseFeature>(i);
  throw DefinitionError("unknown base feature '" + std::string(name) + "'");
}

std::string_view to_string(Aggregator a) { return a == Aggregator::Sum ? "sum" : "mean"; }

FeatureDefinition FeatureDefinition::extended(Aggregator a) const {
  FeatureDefinition d = *this;
  d.chain.push_back(a);
  return d;
}

std::string FeatureDefinition::name() const {
  std::string out(to_string(base));
  for (Aggregator a : chain) out = std::string(to_string(a)) + "(" + out + ")";
  return out;
}

FeatureDefinition FeatureDefinition::parse(std::string_view name) {
  std::vector<Aggregator> outer_first;
  while (!name.empty() && name.back() == ')') {
    auto open = name.find('(');
    if (open == std::string_view::npos) throw DefinitionError("unbalanced feature name");
    auto head = name.substr(0, open);
    if (head == "sum") outer_first.push_back(Aggregator::Sum);
    else if (head == "mean") outer_first.push_back(Aggregator::Mean);
    else throw DefinitionError("unknown aggregator '" + std::string(head) + "'");
    name = name.substr(open + 1, name.size() - open - 2);
  }
  FeatureDefinition d;
  d.base = parse_base_feature(name);
  d.chain.assign(outer_first.rbegin(), outer_first.rend());
  return d;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> columns) const {
  FeatureMatrix out;
  out.timestep = timestep;
  out.nodes = nodes;
  out.values.resize(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out.defs.push_back(defs.at(columns[j]));
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(columns[j]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Base features

namespace {

/// All twelve base columns for a snapshot, local row order.
Eigen::MatrixXd all_base_columns(const SnapshotGraph& g, WorkCounter* work) {
  const auto n = static_cast<std::uint32_t>(g.node_count());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, kBaseFeatureCount);
  auto col = [](BaseFeature f) { return static_cast<Eigen::Index>(f); };

  for (std::uint32_t u = 0; u < n; ++u) {
    double w_out = 0, w_in = 0;
    for (const auto& a : g.out_arcs(u)) w_out += a.weight;
    for (const auto& a : g.in_arcs(u)) w_in += a.weight;
    const double d_out = static_cast<double>(g.out_arcs(u).size());
    const double d_in = static_cast<double>(g.in_arcs(u).size());
    count(work, g.out_arcs(u).size() + g.in_arcs(u).size());
    out(u, col(BaseFeature::OutDegree)) = d_out;
    out(u, col(BaseFeature::InDegree)) = d_in;
    out(u, col(BaseFeature::TotalDegree)) = d_out + d_in;
    out(u, col(BaseFeature::WeightedOutDegree)) = w_out;
    out(u, col(BaseFeature::WeightedInDegree)) = w_in;
    out(u, col(BaseFeature::WeightedTotalDegree)) = w_out + w_in;
  }

  // Egonet counts: stamp the ego members, then classify every arc leaving or
  // entering a member as internal or boundary.
  std::vector<std::uint32_t> stamp(n, UINT32_MAX);
  for (std::uint32_t u = 0; u < n; ++u) {
    stamp[u] = u;
    for (auto v : g.neighbors(u)) stamp[v] = u;
    double internal = 0, incoming = 0, outgoing = 0;
    double w_internal = 0, w_incoming = 0, w_outgoing = 0;
    auto visit = [&](std::uint32_t v) {
      for (const auto& a : g.out_arcs(v)) {
        if (stamp[a.target] == u) {
          internal += 1;
          w_internal += a.weight;
        } else {
          outgoing += 1;
          w_outgoing += a.weight;
        }
      }
      for (const auto& a : g.in_arcs(v)) {
        if (stamp[a.target] != u) {
          incoming += 1;
          w_incoming += a.weight;
        }
      }
      count(work, g.out_arcs(v).size() + g.in_arcs(v).size());
    };
    visit(u);
    for (auto v : g.neighbors(u)) visit(v);
    out(u, col(BaseFeature::EgoInternal)) = internal;
    out(u, col(BaseFeature::EgoIncoming)) = incoming;
    out(u, col(BaseFeature::EgoOutgoing)) = outgoing;
    out(u, col(BaseFeature::WeightedEgoInternal)) = w_internal;
    out(u, col(BaseFeature::WeightedEgoIncoming)) = w_incoming;
    out(u, col(BaseFeature::WeightedEgoOutgoing)) = w_outgoing;
  }
  return out;
}

Eigen::VectorXd aggregate_column(const SnapshotGraph& g, const Eigen::Ref<const Eigen::VectorXd>& column,
                                 Aggregator agg, WorkCounter* work) {
  const auto n = static_cast<std::uint32_t>(g.node_count());
  Eigen::VectorXd out(n);
  for (std::uint32_t u = 0; u < n; ++u) {
    auto nbrs = g.neighbors(u);
    double sum = 0;
    for (auto v : nbrs) sum += column(v);
    count(work, nbrs.size());
    if (agg == Aggregator::Mean) sum = nbrs.empty() ? 0.0 : sum / static_cast<double>(nbrs.size());
    out(u) = sum;
  }
  return out;
}

FeatureMatrix empty_matrix_for(const SnapshotGraph& g) {
  FeatureMatrix m;
  m.timestep = g.index();
  m.nodes.assign(g.active_nodes().begin(), g.active_nodes().end());
  return m;
}

}  // namespace

FeatureMatrix base_features(const SnapshotGraph& snapshot, WorkCounter* work) {
  FeatureMatrix m = empty_matrix_for(snapshot);
  const std::size_t f = snapshot.weighted() ? kBaseFeatureCount : kUnweightedBaseCount;
  Eigen::MatrixXd all = all_base_columns(snapshot, work);
  m.values = all.leftCols(static_cast<Eigen::Index>(f));
  for (std::size_t i = 0; i < f; ++i) m.defs.push_back({static_cast<BaseFeature>(i), {}});
  return m;
}

FeatureMatrix recursive_aggregate(const FeatureMatrix& V, const SnapshotGraph& snapshot, WorkCounter* work) {
  if (V.rows() != snapshot.node_count())
    throw SchemaError("feature matrix rows do not match snapshot " + std::to_string(snapshot.index()));
  FeatureMatrix out = V;
  const auto n = static_cast<Eigen::Index>(V.rows());
  const auto f = static_cast<Eigen::Index>(V.cols());
  out.values.conservativeResize(n, 3 * f);
  for (Eigen::Index j = 0; j < f; ++j) {
    for (Aggregator agg : {Aggregator::Sum, Aggregator::Mean}) {
      const Eigen::Index dst = f + 2 * j + (agg == Aggregator::Mean ? 1 : 0);
      out.values.col(dst) = aggregate_column(snapshot, V.values.col(j), agg, work);
      out.defs.push_back(V.defs[static_cast<std::size_t>(j)].extended(agg));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pruning

std::vector<std::uint32_t> log_bin(std::span<const double> column, double fraction, std::size_t max_bins) {
  if (!(fraction > 0 && fraction <= 1)) throw ArgumentError("binning fraction must lie in (0, 1]");
  if (max_bins < 1) throw ArgumentError("need at least one bin");
  const std::size_t n = column.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });

  std::vector<std::uint32_t> bins(n, 0);
  std::size_t pos = 0;
  std::uint32_t bin = 0;
  while (pos < n) {
    const std::size_t remaining = n - pos;
    std::size_t take = remaining;
    if (bin + 1 < max_bins)
      take = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(remaining))));
    std::size_t end = pos + take;
    while (end < n && column[order[end]] == column[order[end - 1]]) ++end;
    for (std::size_t i = pos; i < end; ++i) bins[order[i]] = bin;
    pos = end;
    ++bin;
  }
  return bins;
}

std::size_t derived_bin_count(std::size_t rows, double fraction) {
  std::size_t bins = 0;
  std::size_t remaining = rows;
  while (remaining > 0) {
    remaining -= std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(remaining))));
    ++bins;
  }
  return std::max<std::size_t>(bins, 2);
}

FeatureMatrix prune_features(const FeatureMatrix& candidates, const PruneOptions& options) {
  const std::size_t bins = options.bins ? options.bins : derived_bin_count(candidates.rows(), options.fraction);
  if (bins < 2) throw ArgumentError("pruning needs at least 2 bins");

  // Exact agreement of bin vectors is an equivalence relation, so the
  // connected components of the feature graph are its classes.
  std::map<std::vector<std::uint32_t>, std::size_t> representative;
  const auto n = static_cast<std::size_t>(candidates.values.rows());
  for (std::size_t j = 0; j < candidates.cols(); ++j) {
    const auto col = candidates.values.col(static_cast<Eigen::Index>(j));
    auto key = log_bin(std::span<const double>(col.data(), n), options.fraction, bins);
    auto [it, inserted] = representative.try_emplace(std::move(key), j);
    if (!inserted) {
      const auto& cur = candidates.defs[it->second];
      if (candidates.defs[j].generation() < cur.generation()) it->second = j;
    }
  }
  std::vector<std::size_t> keep;
  keep.reserve(representative.size());
  for (const auto& [key, j] : representative) keep.push_back(j);
  std::sort(keep.begin(), keep.end());
  return candidates.select_columns(keep);
}

FeatureMatrix prune_features(const FeatureMatrix& candidates, std::size_t bins) {
  if (bins < 2) throw ArgumentError("pruning needs at least 2 bins");
  return prune_features(candidates, PruneOptions{0.5, bins});
}

// ---------------------------------------------------------------------------
// Learning and extraction

LearnedFeatures learn_features(const SnapshotGraph& snapshot, const LearnOptions& options, WorkCounter* work) {
  if (snapshot.empty()) throw ArgumentError("cannot learn features on an empty snapshot");
  LearnedFeatures out;
  FeatureMatrix retained = prune_features(base_features(snapshot, work), options.prune);
  std::vector<std::size_t> frontier(retained.cols());
  std::iota(frontier.begin(), frontier.end(), 0);

  std::size_t depth = 0;
  while (!frontier.empty()) {
    if (depth == options.max_depth) {
      out.hit_depth_cap = true;
      spdlog::info("feature learning on snapshot {} stopped at depth cap {} with {} features", snapshot.index(),
                   options.max_depth, retained.cols());
      break;
    }
    ++depth;
    // Only the newest generation is aggregated; older columns were already expanded.
    FeatureMatrix expanded = recursive_aggregate(retained.select_columns(frontier), snapshot, work);
    const auto old_cols = static_cast<Eigen::Index>(retained.cols());
    const auto new_cols = static_cast<Eigen::Index>(expanded.cols() - frontier.size());
    FeatureMatrix combined = retained;
    combined.values.conservativeResize(Eigen::NoChange, old_cols + new_cols);
    combined.values.rightCols(new_cols) = expanded.values.rightCols(new_cols);
    combined.defs.insert(combined.defs.end(), expanded.defs.begin() + static_cast<std::ptrdiff_t>(frontier.size()),
                         expanded.defs.end());

    FeatureMatrix pruned = prune_features(combined, options.prune);
    frontier.clear();
    for (std::size_t j = 0; j < pruned.cols(); ++j)
      if (pruned.defs[j].generation() == depth) frontier.push_back(j);
    retained = std::move(pruned);
  }
  out.iterations = depth;
  out.defs = retained.defs;
  out.matrix = std::move(retained);
  return out;
}

FeatureMatrix extract_features(const SnapshotGraph& snapshot, std::span<const FeatureDefinition> defs,
                               WorkCounter* work) {
  if (defs.empty()) throw ArgumentError("extract_features needs at least one definition");
  FeatureMatrix m = empty_matrix_for(snapshot);
  m.defs.assign(defs.begin(), defs.end());
  const auto n = static_cast<Eigen::Index>(snapshot.node_count());
  m.values.resize(n, static_cast<Eigen::Index>(defs.size()));
  if (n == 0) return m;

  const Eigen::MatrixXd base = all_base_columns(snapshot, work);
  // Memoised by definition so shared chain prefixes are evaluated once.
  std::map<FeatureDefinition, Eigen::VectorXd> cache;
  auto evaluate = [&](const FeatureDefinition& def) -> Eigen::VectorXd {
    FeatureDefinition prefix{def.base, {}};
    Eigen::VectorXd current = base.col(static_cast<Eigen::Index>(def.base));
    for (Aggregator a : def.chain) {
      prefix = prefix.extended(a);
      auto it = cache.find(prefix);
      if (it == cache.end()) it = cache.emplace(prefix, aggregate_column(snapshot, current, a, work)).first;
      current = it->second;
    }
    return current;
  };
  for (std::size_t j = 0; j < defs.size(); ++j) m.values.col(static_cast<Eigen::Index>(j)) = evaluate(defs[j]);
  return m;
}

// ---------------------------------------------------------------------------
// Serialization

std::string feature_definitions_to_json(std::span<const FeatureDefinition> defs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : defs) {
    nlohmann::json chain = nlohmann::json::array();
    for (Aggregator a : d.chain) chain.push_back(to_string(a));
    arr.push_back({{"name", d.name()}, {"base", to_string(d.base)}, {"chain", chain}});
  }
  return arr.dump(2);
}

std::vector<FeatureDefinition> feature_definitions_from_json(std::string_view json) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw DefinitionError(std::string("feature definitions: ") + e.what());
  }
  if (!arr.is_array()) throw DefinitionError("feature definitions must be a JSON array");
  std::vector<FeatureDefinition> out;
  for (const auto& item : arr) {
    if (!item.contains("base") || !item["base"].is_string()) throw DefinitionError("feature definition lacks a base");
    FeatureDefinition d;
    d.base = parse_base_feature(item["base"].get<std::string>());
    for (const auto& a : item.value("chain", nlohmann::json::array())) {
      auto s = a.get<std::string>();
      if (s == "sum") d.chain.push_back(Aggregator::Sum);
      else if (s == "mean") d.chain.push_back(Aggregator::Mean);
      else throw DefinitionError("unknown aggregator '" + s + "'");
    }
    out.push_back(std::move(d));
  }
  return out;
}

void write_feature_csv(std::ostream& out, std::span<const FeatureMatrix> matrices, const NodeDictionary& nodes) {
  std::vector<FeatureDefinition> defs;
  for (const auto& m : matrices)
    if (!m.defs.empty()) {
      defs = m.defs;
      break;
    }
  out << "t,node";
  for (const auto& d : defs) out << ',' << text::csv_field(d.name());
  out << '\n';
  for (const auto& m : matrices) {
    if (m.rows() > 0 && m.defs != defs) throw SchemaError("feature matrices disagree on columns");
    for (std::size_t i = 0; i < m.rows(); ++i) {
      out << m.timestep << ',' << text::csv_field(nodes.label(m.nodes[i]));
      for (std::size_t j = 0; j < m.cols(); ++j)
        out << ',' << text::format_double(m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out << '\n';
    }
  }
}

std::vector<FeatureMatrix> read_feature_csv(std::istream& in, const NodeDictionary& nodes, std::size_t t_max) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "feature CSV is empty");
  auto header = text::parse_csv_record(line);
  if (header.size() < 2 || header[0] != "t" || header[1] != "node") throw ParseError(1, "feature CSV header");
  std::vector<FeatureDefinition> defs;
  for (std::size_t j = 2; j < header.size(); ++j) defs.push_back(FeatureDefinition::parse(header[j]));

  std::vector<std::vector<std::pair<NodeId, std::vector<double>>>> rows(t_max);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto rec = text::parse_csv_record(line);
    if (rec.size() != header.size()) throw ParseError(lineno, "feature CSV row has wrong arity");
    auto t = text::parse_int<std::size_t>(rec[0]);
    if (!t || *t < 1 || *t > t_max) throw ParseError(lineno, "timestep out of range");
    auto id = nodes.find(rec[1]);
    if (!id) throw LookupError("feature CSV names unknown node '" + rec[1] + "'");
    std::vector<double> vals;
    vals.reserve(defs.size());
    for (std::size_t j = 2; j < rec.size(); ++j) {
      auto v = text::parse_double(rec[j]);
      if (!v) throw ParseError(lineno, "bad feature value");
      vals.push_back(*v);
    }
    rows[*t - 1].emplace_back(*id, std::move(vals));
  }

  std::vector<FeatureMatrix> out(t_max);
  for (std::size_t t = 0; t < t_max; ++t) {
    auto& r = rows[t];
    std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    FeatureMatrix& m = out[t];
    m.timestep = t + 1;
    m.defs = defs;
    m.values.resize(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(defs.size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
      m.nodes.push_back(r[i].first);
      for (std::size_t j = 0; j < defs.size(); ++j)
        m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i].second[j];
    }
  }
  return out;
}

}  // namespace roledyn
