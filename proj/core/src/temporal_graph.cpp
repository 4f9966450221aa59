#include "roledyn/temporal_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "roledyn/errors.hpp"
#include "roledyn/text.hpp"

namespace roledyn {

using nlohmann::json;

NodeId NodeDictionary::intern(std::string_view label) {
  std::string key(label);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  auto id = static_cast<NodeId>(labels_.size());
  labels_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<NodeId> NodeDictionary::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& NodeDictionary::label(NodeId id) const {
  if (id >= labels_.size()) throw LookupError("unknown node id " + std::to_string(id));
  return labels_[id];
}

// ---------------------------------------------------------------------------
// Ingestion

EdgeSchema EdgeSchema::parse(std::string_view spec) {
  EdgeSchema s{-1, -1, -1, -1, -1, -1};
  int col = 0;
  for (auto name : text::split_fields(spec)) {
    if (name == "src") s.src = col;
    else if (name == "dst") s.dst = col;
    else if (name == "time") s.time = col;
    else if (name == "begin") s.begin = col;
    else if (name == "end") s.end = col;
    else if (name == "weight") s.weight = col;
    ++col;
  }
  if (s.src < 0 || s.dst < 0) throw ArgumentError("edge schema needs src and dst columns: '" + std::string(spec) + "'");
  bool has_time = s.time >= 0;
  bool has_interval = s.begin >= 0 && s.end >= 0;
  if (has_time == has_interval || (!has_interval && (s.begin >= 0 || s.end >= 0)))
    throw ArgumentError("edge schema needs either time or begin+end: '" + std::string(spec) + "'");
  return s;
}

std::string EdgeSchema::to_string() const {
  std::map<int, std::string> names;
  names[src] = "src";
  names[dst] = "dst";
  if (time >= 0) names[time] = "time";
  if (begin >= 0) names[begin] = "begin";
  if (end >= 0) names[end] = "end";
  if (weight >= 0) names[weight] = "weight";
  std::string out;
  int expected = 0;
  for (auto& [col, name] : names) {
    for (; expected < col; ++expected) out += out.empty() ? "_" : ",_";
    out += out.empty() ? name : "," + name;
    expected = col + 1;
  }
  return out;
}

int EdgeSchema::required_columns() const {
  return 1 + std::max({src, dst, time, begin, end, weight});
}

namespace {

std::optional<TemporalEdge> parse_edge_line(std::string_view line, const EdgeSchema& schema,
                                            NodeDictionary& nodes) {
  auto fields = text::split_fields(line);
  if (static_cast<int>(fields.size()) < schema.required_columns()) return std::nullopt;
  TemporalEdge e;
  if (schema.time >= 0) {
    auto t = text::parse_double(fields[schema.time]);
    if (!t || !std::isfinite(*t)) return std::nullopt;
    e.begin = e.end = *t;
  } else {
    auto b = text::parse_double(fields[schema.begin]);
    auto en = text::parse_double(fields[schema.end]);
    if (!b || !en || !std::isfinite(*b) || !std::isfinite(*en) || *en < *b) return std::nullopt;
    e.begin = *b;
    e.end = *en;
  }
  if (schema.weight >= 0) {
    auto w = text::parse_double(fields[schema.weight]);
    if (!w || !std::isfinite(*w) || *w < 0) return std::nullopt;
    e.weight = *w;
  }
  // Interning comes last so malformed lines leave no trace in the dictionary.
  e.src = nodes.intern(fields[schema.src]);
  e.dst = nodes.intern(fields[schema.dst]);
  return e;
}

}  // namespace

TemporalEdgeSet ingest_edge_list(std::istream& source, const IngestOptions& options) {
  TemporalEdgeSet out;
  std::string line;
  std::size_t lineno = 0;
  bool header_pending = options.skip_header;
  while (std::getline(source, line)) {
    ++lineno;
    std::string_view view(line);
    auto first = view.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || view[first] == '#' || view[first] == '%') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    auto edge = parse_edge_line(view, options.schema, out.nodes);
    if (!edge) {
      if (options.strict) throw ParseError(lineno, "malformed edge record '" + line + "'");
      if (out.malformed_lines++ == 0) out.first_malformed_line = lineno;
      continue;
    }
    out.edges.push_back(*edge);
  }
  if (source.bad()) throw IoError("read failure while ingesting edge list");
  return out;
}

TemporalEdgeSet ingest_edge_list(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path.string() + "'");
  return ingest_edge_list(in, options);
}

// ---------------------------------------------------------------------------
// Snapshots

std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::Sum:
      return "sum";
    case Aggregation::Max:
      return "max";
    case Aggregation::Count:
      return "count";
  }
  return "sum";
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "sum") return Aggregation::Sum;
  if (name == "max") return Aggregation::Max;
  if (name == "count") return Aggregation::Count;
  throw ArgumentError("unknown aggregation '" + std::string(name) + "'");
}

SnapshotGraph::SnapshotGraph(std::size_t index, std::vector<WeightedEdge> edges)
    : index_(index), edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (!(e.weight > 0) || !std::isfinite(e.weight))
      throw ArgumentError("snapshot edge weights must be positive and finite");
    if (i > 0 && edges_[i - 1].src == e.src && edges_[i - 1].dst == e.dst)
      throw ArgumentError("duplicate (src,dst) pair in snapshot " + std::to_string(index));
    if (e.weight != 1.0) weighted_ = true;
    active_.push_back(e.src);
    active_.push_back(e.dst);
  }
  std::sort(active_.begin(), active_.end());
  active_.erase(std::unique(active_.begin(), active_.end()), active_.end());

  const std::size_t n = active_.size();
  std::vector<std::size_t> out_deg(n, 0), in_deg(n, 0);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> local(edges_.size());
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    auto u = *local_index(edges_[i].src);
    auto v = *local_index(edges_[i].dst);
    local[i] = {u, v};
    ++out_deg[u];
    ++in_deg[v];
  }
  out_offsets_.assign(n + 1, 0);
  in_offsets_.assign(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) {
    out_offsets_[u + 1] = out_offsets_[u] + out_deg[u];
    in_offsets_[u + 1] = in_offsets_[u] + in_deg[u];
  }
  out_arcs_.resize(edges_.size());
  in_arcs_.resize(edges_.size());
  std::vector<std::size_t> out_pos(out_offsets_.begin(), out_offsets_.end() - 1);
  std::vector<std::size_t> in_pos(in_offsets_.begin(), in_offsets_.end() - 1);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    auto [u, v] = local[i];
    out_arcs_[out_pos[u]++] = {v, edges_[i].weight};
    in_arcs_[in_pos[v]++] = {u, edges_[i].weight};
  }
  // in-arcs are filled in (src,dst) order so each bucket is already sorted by source.

  nbr_offsets_.assign(n + 1, 0);
  nbrs_.reserve(2 * edges_.size());
  std::vector<std::uint32_t> buf;
  for (std::uint32_t u = 0; u < n; ++u) {
    buf.clear();
    for (const auto& a : out_arcs(u))
      if (a.target != u) buf.push_back(a.target);
    for (const auto& a : in_arcs(u))
      if (a.target != u) buf.push_back(a.target);
    std::sort(buf.begin(), buf.end());
    buf.erase(std::unique(buf.begin(), buf.end()), buf.end());
    nbrs_.insert(nbrs_.end(), buf.begin(), buf.end());
    nbr_offsets_[u + 1] = nbrs_.size();
  }
}

std::optional<std::uint32_t> SnapshotGraph::local_index(NodeId node) const {
  auto it = std::lower_bound(active_.begin(), active_.end(), node);
  if (it == active_.end() || *it != node) return std::nullopt;
  return static_cast<std::uint32_t>(it - active_.begin());
}

SnapshotSequence::SnapshotSequence(std::vector<SnapshotGraph> snapshots, NodeDictionary nodes,
                                   double window_width, Timestamp origin, Aggregation aggregation)
    : snapshots_(std::move(snapshots)),
      nodes_(std::move(nodes)),
      window_width_(window_width),
      origin_(origin),
      aggregation_(aggregation) {
  if (!(window_width_ > 0)) throw ArgumentError("window width must be positive");
  for (std::size_t i = 0; i < snapshots_.size(); ++i) {
    if (snapshots_[i].index() != i + 1) throw ArgumentError("snapshot indices must be consecutive from 1");
    for (NodeId v : snapshots_[i].active_nodes())
      if (v >= nodes_.size()) throw ArgumentError("snapshot references node outside the dictionary");
  }
}

std::size_t SnapshotSequence::total_edges() const {
  std::size_t total = 0;
  for (const auto& s : snapshots_) total += s.edge_count();
  return total;
}

SnapshotSequence bin_snapshots(const TemporalEdgeSet& edges, const BinOptions& options) {
  const double w = options.window_width;
  if (!(w > 0) || !std::isfinite(w)) throw ArgumentError("window width must be positive");
  if (edges.edges.empty()) throw ArgumentError("cannot bin an empty edge set");

  Timestamp origin = options.origin.value_or(edges.edges.front().begin);
  Timestamp last = edges.edges.front().end;
  if (!options.origin)
    for (const auto& e : edges.edges) origin = std::min(origin, e.begin);
  for (const auto& e : edges.edges) last = std::max(last, e.end);
  if (last < origin) throw ArgumentError("all edges end before the window origin");

  auto window_of = [&](Timestamp t) { return static_cast<std::int64_t>(std::floor((t - origin) / w)); };
  const std::int64_t t_max = window_of(last) + 1;

  struct Accum {
    double value = 0.0;
  };
  std::vector<std::map<std::pair<NodeId, NodeId>, Accum>> windows(static_cast<std::size_t>(t_max));
  for (const auto& e : edges.edges) {
    if (e.src == e.dst && !options.keep_self_loops) continue;
    if (e.end < origin) continue;
    std::int64_t k0 = std::max<std::int64_t>(0, window_of(e.begin));
    std::int64_t k1 = window_of(e.end);
    for (std::int64_t k = k0; k <= k1; ++k) {
      auto [it, inserted] = windows[static_cast<std::size_t>(k)].try_emplace({e.src, e.dst});
      double& acc = it->second.value;
      switch (options.aggregation) {
        case Aggregation::Sum:
          acc += e.weight;
          break;
        case Aggregation::Max:
          acc = inserted ? e.weight : std::max(acc, e.weight);
          break;
        case Aggregation::Count:
          acc += 1.0;
          break;
      }
    }
  }

  std::vector<SnapshotGraph> snapshots;
  snapshots.reserve(windows.size());
  for (std::size_t k = 0; k < windows.size(); ++k) {
    std::vector<WeightedEdge> list;
    list.reserve(windows[k].size());
    // Zero-weight interactions carry no adjacency.
    for (const auto& [key, acc] : windows[k])
      if (acc.value > 0) list.push_back({key.first, key.second, acc.value});
    snapshots.emplace_back(k + 1, std::move(list));
  }
  return SnapshotSequence(std::move(snapshots), edges.nodes, w, origin, options.aggregation);
}

// ---------------------------------------------------------------------------
// Archive

void write_snapshot_archive(const SnapshotSequence& seq, std::ostream& archive, std::ostream& manifest) {
  archive << "# roledyn snapshot archive v1\n";
  for (const auto& s : seq.snapshots()) {
    archive << "snapshot " << s.index() << ' ' << s.edge_count() << '\n';
    for (const auto& e : s.edges()) archive << e.src << ' ' << e.dst << ' ' << text::format_double(e.weight) << '\n';
  }
  json m;
  m["format"] = "roledyn-snapshots/1";
  m["archive"] = kSnapshotArchiveFile;
  m["nodes"] = seq.nodes().labels();
  m["window_width"] = seq.window_width();
  m["origin"] = seq.origin();
  m["t_max"] = seq.t_max();
  m["aggregation"] = to_string(seq.aggregation());
  m["edge_count"] = seq.total_edges();
  manifest << m.dump(2) << '\n';
}

SnapshotSequence read_snapshot_archive(std::istream& archive, std::istream& manifest_in) {
  json m;
  try {
    manifest_in >> m;
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("snapshot manifest: ") + e.what());
  }
  NodeDictionary nodes;
  std::size_t t_max = 0;
  double width = 0, origin = 0;
  Aggregation agg = Aggregation::Sum;
  try {
    for (const auto& label : m.at("nodes")) nodes.intern(label.get<std::string>());
    t_max = m.at("t_max").get<std::size_t>();
    width = m.at("window_width").get<double>();
    origin = m.at("origin").get<double>();
    agg = parse_aggregation(m.at("aggregation").get<std::string>());
  } catch (const json::exception& e) {
    throw SchemaError(std::string("snapshot manifest: ") + e.what());
  }

  std::vector<SnapshotGraph> snapshots;
  std::string line;
  std::size_t lineno = 0;
  std::size_t index = 0, remaining = 0;
  std::vector<WeightedEdge> current;
  auto flush = [&] {
    if (index == 0) return;
    if (remaining != 0) throw ParseError(lineno, "snapshot " + std::to_string(index) + " is truncated");
    snapshots.emplace_back(index, std::move(current));
    current.clear();
  };
  while (std::getline(archive, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto f = text::split_fields(line);
    if (f.size() == 3 && f[0] == "snapshot") {
      flush();
      auto idx = text::parse_int<std::size_t>(f[1]);
      auto cnt = text::parse_int<std::size_t>(f[2]);
      if (!idx || !cnt) throw ParseError(lineno, "bad snapshot header");
      index = *idx;
      remaining = *cnt;
      current.reserve(remaining);
      continue;
    }
    if (index == 0 || remaining == 0 || f.size() != 3) throw ParseError(lineno, "unexpected archive record");
    auto s = text::parse_int<NodeId>(f[0]);
    auto d = text::parse_int<NodeId>(f[1]);
    auto wt = text::parse_double(f[2]);
    if (!s || !d || !wt) throw ParseError(lineno, "bad edge record");
    current.push_back({*s, *d, *wt});
    --remaining;
  }
  flush();
  if (snapshots.size() != t_max)
    throw SchemaError("archive holds " + std::to_string(snapshots.size()) + " snapshots, manifest says " +
                      std::to_string(t_max));
  return SnapshotSequence(std::move(snapshots), std::move(nodes), width, origin, agg);
}

void save_snapshot_archive(const SnapshotSequence& seq, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream archive(dir / kSnapshotArchiveFile, std::ios::binary);
  std::ofstream manifest(dir / kSnapshotManifestFile, std::ios::binary);
  if (!archive || !manifest) throw IoError("cannot write snapshot archive in '" + dir.string() + "'");
  write_snapshot_archive(seq, archive, manifest);
}

SnapshotSequence load_snapshot_archive(const std::filesystem::path& dir) {
  std::ifstream archive(dir / kSnapshotArchiveFile, std::ios::binary);
  std::ifstream manifest(dir / kSnapshotManifestFile, std::ios::binary);
  if (!archive || !manifest) throw IoError("cannot open snapshot archive in '" + dir.string() + "'");
  return read_snapshot_archive(archive, manifest);
}

}  // namespace roledyn
