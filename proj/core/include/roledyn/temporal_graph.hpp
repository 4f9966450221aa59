#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace roledyn {

using NodeId = std::uint32_t;
using Timestamp = double;

/// One timestamped interaction. Instantaneous edges have end == begin.
struct TemporalEdge {
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 1.0;
  Timestamp begin = 0.0;
  Timestamp end = 0.0;

  friend bool operator==(const TemporalEdge&, const TemporalEdge&) = default;
};

/// Interns external node labels into contiguous ids in first-seen order.
class NodeDictionary {
 public:
  NodeId intern(std::string_view label);
  std::optional<NodeId> find(std::string_view label) const;
  const std::string& label(NodeId id) const;
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }

  friend bool operator==(const NodeDictionary& a, const NodeDictionary& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> index_;
};

struct TemporalEdgeSet {
  std::vector<TemporalEdge> edges;
  NodeDictionary nodes;
  std::size_t malformed_lines = 0;
  std::size_t first_malformed_line = 0;  // 1-based, 0 when none
};

/// Column mapping for delimited edge lists. Columns are zero-based; -1 = absent.
/// Either `time` or both `begin` and `end` must be present.
struct EdgeSchema {
  int src = 0;
  int dst = 1;
  int time = 2;
  int begin = -1;
  int end = -1;
  int weight = -1;

  /// Parses a comma-separated column list such as "src,dst,time,weight" or
  /// "src,dst,begin,end". Any other name (e.g. "_", "label") skips a column.
  static EdgeSchema parse(std::string_view spec);
  std::string to_string() const;
  int required_columns() const;
};

struct IngestOptions {
  EdgeSchema schema;
  bool strict = true;
  bool skip_header = false;
};

/// Reads a whitespace- or comma-delimited edge list. Blank lines and lines
/// starting with '#' or '%' are ignored. Extra columns are accepted and ignored.
TemporalEdgeSet ingest_edge_list(std::istream& source, const IngestOptions& options = {});
TemporalEdgeSet ingest_edge_list(const std::filesystem::path& path, const IngestOptions& options = {});

enum class Aggregation { Sum, Max, Count };

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view name);

/// Weighted arc in global node ids.
struct WeightedEdge {
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 0.0;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Arc in snapshot-local node indices.
struct Arc {
  std::uint32_t target = 0;
  double weight = 0.0;
};

/// The graph active within one time window. Nodes are addressed either by
/// global NodeId or by their local index into active_nodes().
class SnapshotGraph {
 public:
  SnapshotGraph() = default;
  /// `edges` need not be sorted; duplicate (src,dst) pairs are rejected.
  SnapshotGraph(std::size_t index, std::vector<WeightedEdge> edges);

  std::size_t index() const noexcept { return index_; }
  std::span<const WeightedEdge> edges() const noexcept { return edges_; }
  std::span<const NodeId> active_nodes() const noexcept { return active_; }
  std::size_t node_count() const noexcept { return active_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return edges_.empty(); }
  bool weighted() const noexcept { return weighted_; }

  std::optional<std::uint32_t> local_index(NodeId node) const;

  std::span<const Arc> out_arcs(std::uint32_t u) const { return span_of(out_offsets_, out_arcs_, u); }
  std::span<const Arc> in_arcs(std::uint32_t u) const { return span_of(in_offsets_, in_arcs_, u); }
  /// Union of in- and out-neighbours, sorted, excluding u itself.
  std::span<const std::uint32_t> neighbors(std::uint32_t u) const {
    return {nbrs_.data() + nbr_offsets_[u], nbrs_.data() + nbr_offsets_[u + 1]};
  }

  friend bool operator==(const SnapshotGraph& a, const SnapshotGraph& b) {
    return a.index_ == b.index_ && a.edges_ == b.edges_;
  }

 private:
  static std::span<const Arc> span_of(const std::vector<std::size_t>& off, const std::vector<Arc>& arcs,
                                      std::uint32_t u) {
    return {arcs.data() + off[u], arcs.data() + off[u + 1]};
  }

  std::size_t index_ = 0;
  std::vector<WeightedEdge> edges_;  // sorted by (src, dst)
  std::vector<NodeId> active_;       // sorted
  bool weighted_ = false;
  std::vector<std::size_t> out_offsets_{0}, in_offsets_{0}, nbr_offsets_{0};
  std::vector<Arc> out_arcs_, in_arcs_;
  std::vector<std::uint32_t> nbrs_;
};

struct BinOptions {
  double window_width = 1.0;
  Aggregation aggregation = Aggregation::Sum;
  std::optional<Timestamp> origin;  // defaults to the earliest begin time
  bool keep_self_loops = false;
};

/// Ordered, equal-width, non-overlapping windows t = 1..t_max. Immutable.
class SnapshotSequence {
 public:
  SnapshotSequence(std::vector<SnapshotGraph> snapshots, NodeDictionary nodes, double window_width,
                   Timestamp origin, Aggregation aggregation);

  const std::vector<SnapshotGraph>& snapshots() const noexcept { return snapshots_; }
  const SnapshotGraph& at(std::size_t t) const { return snapshots_.at(t - 1); }  // 1-based
  const NodeDictionary& nodes() const noexcept { return nodes_; }
  std::size_t t_max() const noexcept { return snapshots_.size(); }
  double window_width() const noexcept { return window_width_; }
  Timestamp origin() const noexcept { return origin_; }
  Aggregation aggregation() const noexcept { return aggregation_; }
  std::size_t total_edges() const;

  friend bool operator==(const SnapshotSequence&, const SnapshotSequence&) = default;

 private:
  std::vector<SnapshotGraph> snapshots_;
  NodeDictionary nodes_;
  double window_width_;
  Timestamp origin_;
  Aggregation aggregation_;
};

/// Bins edges into windows [origin + k*w, origin + (k+1)*w). An edge with
/// interval [begin, end] is present in every window it overlaps.
SnapshotSequence bin_snapshots(const TemporalEdgeSet& edges, const BinOptions& options);

/// Line-delimited archive: "snapshot <t> <edge_count>" followed by
/// "<src> <dst> <weight>" lines; the manifest carries the node dictionary.
void write_snapshot_archive(const SnapshotSequence& seq, std::ostream& archive, std::ostream& manifest);
SnapshotSequence read_snapshot_archive(std::istream& archive, std::istream& manifest);

void save_snapshot_archive(const SnapshotSequence& seq, const std::filesystem::path& dir);
SnapshotSequence load_snapshot_archive(const std::filesystem::path& dir);

inline constexpr const char* kSnapshotArchiveFile = "snapshots.txt";
inline constexpr const char* kSnapshotManifestFile = "snapshots.json";

}  // namespace roledyn
