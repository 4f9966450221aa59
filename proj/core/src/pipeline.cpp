#include "roledyn/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "roledyn/errors.hpp"
#include "roledyn/features.hpp"
#include "roledyn/interpretation.hpp"
#include "roledyn/parallel.hpp"
#include "roledyn/svg.hpp"
#include "roledyn/text.hpp"

namespace roledyn {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string_view to_string(RunMode m) {
  return m == RunMode::GlobalBasis ? "global-basis" : "per-timestep-refit";
}

RunMode parse_run_mode(std::string_view name) {
  if (name == "global-basis" || name == "global") return RunMode::GlobalBasis;
  if (name == "per-timestep-refit" || name == "refit") return RunMode::PerTimestepRefit;
  throw ArgumentError("unknown mode '" + std::string(name) + "' (expected global-basis or per-timestep-refit)");
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Features: return "features";
    case Stage::Roles: return "roles";
    case Stage::Track: return "track";
    case Stage::Interpret: return "interpret";
    case Stage::Report: return "report";
  }
  return "ingest";
}

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw ArgumentError("config: " + what); };
  if (!(window_width > 0) || !std::isfinite(window_width)) fail("window_width must be positive and finite");
  if (origin && !std::isfinite(*origin)) fail("origin must be finite");
  if (bins == 1) fail("bins must be 0 (derived) or at least 2");
  if (max_depth > 6) fail("max_depth must lie in [0, 6]");
  if (nmf_max_iters < 1) fail("nmf_max_iters must be at least 1");
  if (!(nmf_tol > 0) || !(nmf_tol < 1)) fail("nmf_tol must lie in (0, 1)");
  if (nmf_inner_iters < 1 || nmf_inner_iters > 100) fail("nmf_inner_iters must lie in [1, 100]");
  if (restarts < 1) fail("restarts must be at least 1");
  if (r_min < 1) fail("r_min must be at least 1");
  if (r_max < r_min) fail("r_max must be >= r_min");
  if (bits < 1 || bits > 16) fail("bits must lie in [1, 16]");
  if (precision_bits < 1 || precision_bits > 52) fail("precision_bits must lie in [1, 52]");
  if (plot_nodes < 1) fail("plot_nodes must be at least 1");
  if (output_dir.empty()) fail("output_dir must be set");
  EdgeSchema::parse(schema);
}

namespace {

// Keeps factor entries out of the denormal range, where multiplicative
// updates both stall and run slowly.
constexpr double kNmfEntryFloor = 1e-16;

}  // namespace

MdlOptions RunConfig::mdl_options() const {
  MdlOptions o;
  o.bits = bits;
  o.precision_bits = precision_bits;
  o.error_model = error_model;
  o.restarts = restarts;
  o.nmf.max_iters = nmf_max_iters;
  o.nmf.tol = nmf_tol;
  o.nmf.inner_iters = nmf_inner_iters;
  o.nmf.entry_floor = kNmfEntryFloor;
  o.nmf.seed = seed;
  o.workers = workers;
  return o;
}

namespace {

ojson config_json(const RunConfig& c) {
  ojson j;
  j["input"] = c.input.generic_string();
  j["schema"] = c.schema;
  j["strict"] = c.strict;
  j["skip_header"] = c.skip_header;
  j["window_width"] = c.window_width;
  j["origin"] = c.origin ? ojson(*c.origin) : ojson(nullptr);
  j["aggregation"] = to_string(c.aggregation);
  j["keep_self_loops"] = c.keep_self_loops;
  j["bins"] = c.bins;
  j["max_depth"] = c.max_depth;
  j["nmf_max_iters"] = c.nmf_max_iters;
  j["nmf_tol"] = c.nmf_tol;
  j["nmf_inner_iters"] = c.nmf_inner_iters;
  j["restarts"] = c.restarts;
  j["seed"] = c.seed;
  j["r_min"] = c.r_min;
  j["r_max"] = c.r_max;
  j["bits"] = c.bits;
  j["precision_bits"] = c.precision_bits;
  j["error_model"] = to_string(c.error_model);
  j["mode"] = to_string(c.mode);
  j["change_metric"] = to_string(c.change_metric);
  j["normalize_measures"] = c.normalize_measures;
  j["betweenness_node_cap"] = c.betweenness_node_cap;
  j["plot_nodes"] = c.plot_nodes;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir.generic_string();
  return j;
}

RunConfig config_from(const ojson& j) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "input") c.input = v.get<std::string>();
    else if (key == "schema") c.schema = v.get<std::string>();
    else if (key == "strict") c.strict = v.get<bool>();
    else if (key == "skip_header") c.skip_header = v.get<bool>();
    else if (key == "window_width") c.window_width = v.get<double>();
    else if (key == "origin") c.origin = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    else if (key == "aggregation") c.aggregation = parse_aggregation(v.get<std::string>());
    else if (key == "keep_self_loops") c.keep_self_loops = v.get<bool>();
    else if (key == "bins") c.bins = v.get<std::size_t>();
    else if (key == "max_depth") c.max_depth = v.get<std::size_t>();
    else if (key == "nmf_max_iters") c.nmf_max_iters = v.get<std::size_t>();
    else if (key == "nmf_tol") c.nmf_tol = v.get<double>();
    else if (key == "nmf_inner_iters") c.nmf_inner_iters = v.get<std::size_t>();
    else if (key == "restarts") c.restarts = v.get<std::size_t>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "r_min") c.r_min = v.get<std::size_t>();
    else if (key == "r_max") c.r_max = v.get<std::size_t>();
    else if (key == "bits") c.bits = v.get<std::size_t>();
    else if (key == "precision_bits") c.precision_bits = v.get<std::size_t>();
    else if (key == "error_model") c.error_model = parse_mdl_error_model(v.get<std::string>());
    else if (key == "mode") c.mode = parse_run_mode(v.get<std::string>());
    else if (key == "change_metric") c.change_metric = parse_distance_metric(v.get<std::string>());
    else if (key == "normalize_measures") c.normalize_measures = v.get<bool>();
    else if (key == "betweenness_node_cap") c.betweenness_node_cap = v.get<std::size_t>();
    else if (key == "plot_nodes") c.plot_nodes = v.get<std::size_t>();
    else if (key == "workers") c.workers = v.get<std::size_t>();
    else if (key == "output_dir") c.output_dir = v.get<std::string>();
    else throw ArgumentError("config: unknown key '" + key + "'");
  }
  return c;
}

}  // namespace

std::string RunConfig::to_json() const { return config_json(*this).dump(2); }

RunConfig RunConfig::from_json(std::string_view json) {
  try {
    return config_from(ojson::parse(json));
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Manifest

std::string RunManifest::to_json() const {
  ojson j;
  j["format"] = "roledyn-manifest-v1";
  j["config"] = config_json(config);
  j["dataset"] = {{"nodes", node_count},       {"input_edges", input_edges}, {"malformed_lines", malformed_lines},
                  {"snapshot_edges", edge_count}, {"t_max", t_max},           {"active_nodes", active_nodes}};
  j["feature_count"] = feature_count;
  j["rank"] = rank;
  ojson trace = ojson::array();
  for (const auto& s : mdl_trace)
    trace.push_back({{"rank", s.rank},
                     {"model_bits", s.model_bits},
                     {"error_bits", s.error_bits},
                     {"total_bits", s.total()},
                     {"objective", s.objective}});
  j["mdl_trace"] = trace;
  j["measures_normalized"] = config.normalize_measures;
  j["betweenness_omitted"] = betweenness_omitted;
  j["interpretation_skipped"] = interpretation_skipped;
  j["completed_stages"] = completed_stages;
  ojson times = ojson::array();
  for (const auto& t : timings) times.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  j["timings"] = times;
  ojson arts = ojson::array();
  for (const auto& a : artifacts) arts.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  j["artifacts"] = arts;
  if (!failed_stage.empty()) j["failure"] = {{"stage", failed_stage}, {"error", error}};
  return j.dump(2);
}

RunManifest RunManifest::from_json(std::string_view json) {
  RunManifest m;
  try {
    const auto j = ojson::parse(json);
    if (j.value("format", "") != "roledyn-manifest-v1") throw SchemaError("manifest: unknown format");
    m.config = config_from(j.at("config"));
    const auto& d = j.at("dataset");
    m.node_count = d.at("nodes").get<std::size_t>();
    m.input_edges = d.at("input_edges").get<std::size_t>();
    m.malformed_lines = d.at("malformed_lines").get<std::size_t>();
    m.edge_count = d.at("snapshot_edges").get<std::size_t>();
    m.t_max = d.at("t_max").get<std::size_t>();
    m.active_nodes = d.at("active_nodes").get<std::vector<std::size_t>>();
    m.feature_count = j.at("feature_count").get<std::size_t>();
    m.rank = j.at("rank").get<std::size_t>();
    for (const auto& s : j.at("mdl_trace"))
      m.mdl_trace.push_back({s.at("rank").get<std::size_t>(), s.at("model_bits").get<double>(),
                             s.at("error_bits").get<double>(), s.at("objective").get<double>()});
    m.betweenness_omitted = j.at("betweenness_omitted").get<std::vector<std::size_t>>();
    m.interpretation_skipped = j.at("interpretation_skipped").get<std::vector<std::size_t>>();
    m.completed_stages = j.at("completed_stages").get<std::vector<std::string>>();
    for (const auto& t : j.at("timings"))
      m.timings.push_back({t.at("stage").get<std::string>(), t.at("seconds").get<double>()});
    for (const auto& a : j.at("artifacts"))
      m.artifacts.push_back(
          {a.at("path").get<std::string>(), a.at("sha256").get<std::string>(), a.at("bytes").get<std::uintmax_t>()});
    if (j.contains("failure")) {
      m.failed_stage = j["failure"].at("stage").get<std::string>();
      m.error = j["failure"].at("error").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
  return m;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

RunManifest load_manifest(const fs::path& dir, const RunConfig& config) {
  RunManifest m;
  if (fs::exists(dir / kManifestFile)) m = RunManifest::from_json(read_file(dir / kManifestFile));
  m.config = config;
  return m;
}

void save_manifest(const RunManifest& manifest, const fs::path& dir) {
  write_file(dir / kManifestFile, manifest.to_json() + "\n");
}

std::vector<std::string> verify_manifest(const RunManifest& manifest, const fs::path& dir) {
  std::vector<std::string> bad;
  for (const auto& a : manifest.artifacts) {
    const auto p = dir / a.path;
    if (!fs::exists(p) || sha256_file(p) != a.sha256) bad.push_back(a.path);
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Stages

namespace {

constexpr const char* kFeaturesJson = "features.json";
constexpr const char* kFeaturesCsv = "features.csv";
constexpr const char* kRoleModel = "role_model.json";
constexpr const char* kRoleModels = "role_models.json";
constexpr const char* kRoleDistance = "role_distance.csv";
constexpr const char* kMemberships = "memberships.csv";
constexpr const char* kImportance = "importance.csv";
constexpr const char* kChangeScores = "change_scores.csv";
constexpr const char* kChangeSummary = "change_summary.csv";
constexpr const char* kMeasures = "measures.csv";
constexpr const char* kExplanation = "explanation.csv";
constexpr const char* kInterpretation = "interpretation.json";
constexpr const char* kNetworkSvg = "network_dynamics.svg";
constexpr const char* kNodeSvg = "node_dynamics.svg";

class StageContext {
 public:
  StageContext(const RunConfig& config, RunManifest& manifest) : config_(config), manifest_(manifest) {}

  const fs::path& dir() const { return config_.output_dir; }

  void emit(const std::string& name, std::string_view content) {
    write_file(dir() / name, content);
    Artifact a{name, sha256_hex(content), content.size()};
    auto it = std::find_if(manifest_.artifacts.begin(), manifest_.artifacts.end(),
                           [&](const Artifact& x) { return x.path == name; });
    if (it != manifest_.artifacts.end()) *it = a;
    else manifest_.artifacts.push_back(a);
    std::sort(manifest_.artifacts.begin(), manifest_.artifacts.end(),
              [](const Artifact& x, const Artifact& y) { return x.path < y.path; });
  }

  const SnapshotSequence& sequence() {
    if (!seq_) seq_ = load_snapshot_archive(dir());
    return *seq_;
  }

  const std::vector<FeatureMatrix>& features() {
    if (!features_) {
      std::istringstream in(read_file(dir() / kFeaturesCsv));
      features_ = read_feature_csv(in, sequence().nodes(), sequence().t_max());
    }
    return *features_;
  }

  std::vector<MembershipMatrix> memberships() {
    std::istringstream in(read_file(dir() / kMemberships));
    return read_membership_csv(in, sequence().nodes(), sequence().t_max(), false);
  }

  void set_sequence(SnapshotSequence s) { seq_ = std::move(s); }
  void set_features(std::vector<FeatureMatrix> f) { features_ = std::move(f); }

 private:
  const RunConfig& config_;
  RunManifest& manifest_;
  std::optional<SnapshotSequence> seq_;
  std::optional<std::vector<FeatureMatrix>> features_;
};

void stage_ingest(StageContext& ctx, RunManifest& m) {
  const RunConfig& c = m.config;
  IngestOptions io;
  io.schema = EdgeSchema::parse(c.schema);
  io.strict = c.strict;
  io.skip_header = c.skip_header;
  TemporalEdgeSet edges = ingest_edge_list(c.input, io);
  if (edges.malformed_lines > 0)
    spdlog::warn("skipped {} malformed line(s); first at line {}", edges.malformed_lines, edges.first_malformed_line);
  if (edges.edges.empty()) throw InsufficientDataError("input " + c.input.string() + " has no edges");
  BinOptions b;
  b.window_width = c.window_width;
  b.aggregation = c.aggregation;
  b.origin = c.origin;
  b.keep_self_loops = c.keep_self_loops;
  SnapshotSequence seq = bin_snapshots(edges, b);

  std::ostringstream archive, manifest;
  write_snapshot_archive(seq, archive, manifest);
  ctx.emit(kSnapshotArchiveFile, archive.str());
  ctx.emit(kSnapshotManifestFile, manifest.str());

  m.input_edges = edges.edges.size();
  m.malformed_lines = edges.malformed_lines;
  m.node_count = seq.nodes().size();
  m.edge_count = seq.total_edges();
  m.t_max = seq.t_max();
  m.active_nodes.clear();
  for (const auto& s : seq.snapshots()) m.active_nodes.push_back(s.node_count());
  ctx.set_sequence(std::move(seq));
}

void stage_features(StageContext& ctx, RunManifest& m) {
  const RunConfig& c = m.config;
  const SnapshotSequence& seq = ctx.sequence();
  const std::size_t T = seq.t_max();
  LearnOptions lo;
  lo.prune.bins = c.bins;
  lo.max_depth = c.max_depth;

  std::vector<LearnedFeatures> learned(T);
  parallel_for(T, c.workers, [&](std::size_t i) {
    if (!seq.at(i + 1).empty()) learned[i] = learn_features(seq.at(i + 1), lo);
  });
  std::vector<std::vector<FeatureDefinition>> lists;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < T; ++i) {
    if (seq.at(i + 1).empty()) continue;
    lists.push_back(learned[i].defs);
    labels.push_back(i + 1);
  }
  if (lists.empty()) throw InsufficientDataError("every snapshot is empty");
  const GlobalFeatureSet global = union_features(lists, labels);

  std::vector<FeatureMatrix> matrices(T);
  parallel_for(T, c.workers, [&](std::size_t i) { matrices[i] = extract_features(seq.at(i + 1), global.defs); });

  std::ostringstream csv;
  write_feature_csv(csv, matrices, seq.nodes());
  ctx.emit(kFeaturesCsv, csv.str());

  ojson j;
  j["features"] = ojson::parse(feature_definitions_to_json(global.defs));
  for (std::size_t k = 0; k < global.defs.size(); ++k) j["features"][k]["timesteps"] = global.provenance[k];
  ojson per = ojson::array();
  for (std::size_t i = 0; i < T; ++i) {
    ojson e{{"t", i + 1}, {"active_nodes", seq.at(i + 1).node_count()}};
    e["learned"] = learned[i].defs.size();
    e["iterations"] = learned[i].iterations;
    e["hit_depth_cap"] = learned[i].hit_depth_cap;
    per.push_back(e);
  }
  j["per_timestep"] = per;
  ctx.emit(kFeaturesJson, j.dump(2) + "\n");
  m.feature_count = global.defs.size();
  ctx.set_features(std::move(matrices));
}

std::string distance_csv(const DistanceMatrix& d) {
  std::ostringstream out;
  out << "role_a,role_b,distance\n";
  for (Eigen::Index a = 0; a < d.values.rows(); ++a)
    for (Eigen::Index b = 0; b < d.values.cols(); ++b)
      out << a << ',' << b << ',' << text::format_double(d.values(a, b)) << '\n';
  return out.str();
}

void stage_roles(StageContext& ctx, RunManifest& m) {
  const RunConfig& c = m.config;
  const auto& matrices = ctx.features();
  if (c.mode == RunMode::GlobalBasis) {
    const StackedMatrix stacked = stack_global(matrices);
    const auto limit = static_cast<std::size_t>(std::min(stacked.values.rows(), stacked.values.cols()));
    if (limit < 2 || c.r_min > limit - 1)
      throw InsufficientDataError("stacked matrix is " + std::to_string(stacked.values.rows()) + "x" +
                                  std::to_string(stacked.values.cols()) + "; too small for rank " +
                                  std::to_string(c.r_min));
    const std::size_t r_hi = std::min(c.r_max, limit - 1);
    if (r_hi < c.r_max) spdlog::info("rank scan capped at {} by the matrix shape", r_hi);
    const RoleModel model = learn_global_roles(stacked, c.r_min, r_hi, c.mdl_options());
    ctx.emit(kRoleModel, role_model_to_json(model) + "\n");
    ctx.emit(kRoleDistance, distance_csv(role_distance(model, c.change_metric)));
    m.rank = model.rank();
    m.mdl_trace = model.mdl_trace;
  } else {
    RefitOptions ro;
    ro.r_min = c.r_min;
    ro.r_max = c.r_max;
    ro.mdl = c.mdl_options();
    ro.mdl.workers = 1;
    ro.workers = c.workers;
    const RefitResult refit = refit_per_timestep(matrices, ro);
    ojson j;
    j["heuristic_track_matching"] = true;
    j["track_count"] = refit.track_count;
    ojson steps = ojson::array();
    for (const auto& s : refit.steps) {
      ojson e{{"t", s.timestep}, {"skipped", s.skipped}};
      if (!s.skipped) {
        e["track_ids"] = s.track_ids;
        e["model"] = ojson::parse(role_model_to_json(s.model));
      }
      steps.push_back(e);
    }
    j["steps"] = steps;
    ctx.emit(kRoleModels, j.dump(2) + "\n");
    m.rank = refit.track_count;
    m.mdl_trace.clear();
  }
}

struct NodeChange {
  NodeId node = 0;
  std::size_t active = 0;
  ChangeScores scores;
};

std::vector<NodeChange> all_change_scores(std::span<const MembershipMatrix> memberships, std::size_t universe,
                                          DistanceMetric metric, std::size_t workers) {
  std::vector<std::optional<NodeChange>> slots(universe);
  parallel_for(universe, workers, [&](std::size_t v) {
    const auto tr = node_trajectory(memberships, static_cast<NodeId>(v), universe);
    const auto active = tr.active_count();
    if (active < 2) return;
    slots[v] = NodeChange{static_cast<NodeId>(v), active, behavior_change_score(tr, metric)};
  });
  std::vector<NodeChange> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

void stage_track(StageContext& ctx, RunManifest& m) {
  const RunConfig& c = m.config;
  const auto& matrices = ctx.features();
  const auto& seq = ctx.sequence();
  std::vector<MembershipMatrix> memberships;
  std::size_t r = 0;
  if (c.mode == RunMode::GlobalBasis) {
    const RoleModel model = role_model_from_json(read_file(ctx.dir() / kRoleModel));
    memberships = track_memberships(matrices, model, c.workers);
    r = model.rank();
  } else {
    ojson j;
    try {
      j = ojson::parse(read_file(ctx.dir() / kRoleModels));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("role models: ") + e.what());
    }
    std::vector<RefitTimestep> steps;
    for (const auto& e : j.at("steps")) {
      RefitTimestep s;
      s.timestep = e.at("t").get<std::size_t>();
      s.skipped = e.at("skipped").get<bool>();
      if (!s.skipped) {
        s.track_ids = e.at("track_ids").get<std::vector<std::size_t>>();
        s.model = role_model_from_json(e.at("model").dump());
      }
      steps.push_back(std::move(s));
    }
    r = j.at("track_count").get<std::size_t>();
    memberships = refit_memberships(matrices, steps, r, c.workers);
  }

  std::ostringstream mcsv;
  write_membership_csv(mcsv, memberships, seq.nodes());
  ctx.emit(kMemberships, mcsv.str());

  const auto series = role_importance_series(memberships, r);
  std::ostringstream icsv;
  icsv << "t,empty";
  for (std::size_t k = 0; k < r; ++k) icsv << ",role_" << k;
  icsv << '\n';
  for (Eigen::Index t = 0; t < series.values.rows(); ++t) {
    icsv << t + 1 << ',' << (series.empty[static_cast<std::size_t>(t)] ? 1 : 0);
    for (Eigen::Index k = 0; k < series.values.cols(); ++k) icsv << ',' << text::format_double(series.values(t, k));
    icsv << '\n';
  }
  ctx.emit(kImportance, icsv.str());

  const auto changes = all_change_scores(memberships, seq.nodes().size(), c.change_metric, c.workers);
  std::ostringstream scsv, sumcsv;
  scsv << "node,t,score,spans_gap\n";
  sumcsv << "node,active_timesteps,argmax_t,max_score\n";
  for (const auto& ch : changes) {
    const auto label = text::csv_field(seq.nodes().label(ch.node));
    for (std::size_t t = 0; t < ch.scores.score.size(); ++t)
      if (ch.scores.score[t])
        scsv << label << ',' << t + 1 << ',' << text::format_double(*ch.scores.score[t]) << ','
             << (ch.scores.spans_gap[t] ? 1 : 0) << '\n';
    sumcsv << label << ',' << ch.active << ',' << ch.scores.argmax_timestep << ','
           << text::format_double(ch.scores.max_score) << '\n';
  }
  ctx.emit(kChangeScores, scsv.str());
  ctx.emit(kChangeSummary, sumcsv.str());
  m.rank = r;
}

void stage_interpret(StageContext& ctx, RunManifest& m) {
  const RunConfig& c = m.config;
  const auto& seq = ctx.sequence();
  std::vector<MembershipMatrix> memberships = ctx.memberships();
  for (auto& g : memberships) g = g.normalized_rows();

  MeasureOptions mo;
  mo.normalize = c.normalize_measures;
  mo.betweenness_node_cap = c.betweenness_node_cap;
  std::vector<NodeMeasureMatrix> measures(seq.t_max());
  parallel_for(seq.t_max(), c.workers, [&](std::size_t i) { measures[i] = compute_node_measures(seq.at(i + 1), mo); });

  const RoleExplanation ex = interpret_roles(memberships, measures, c.workers);

  std::ostringstream mcsv, ecsv;
  write_measure_csv(mcsv, measures, seq.nodes());
  write_explanation_csv(ecsv, ex);
  ctx.emit(kMeasures, mcsv.str());
  ctx.emit(kExplanation, ecsv.str());

  m.betweenness_omitted.clear();
  for (const auto& mm : measures)
    if (mm.betweenness_omitted) m.betweenness_omitted.push_back(mm.timestep);
  if (!m.betweenness_omitted.empty())
    spdlog::warn("betweenness omitted at {} timestep(s) above the node cap of {}", m.betweenness_omitted.size(),
                 c.betweenness_node_cap);
  m.interpretation_skipped = ex.skipped;

  auto matrix_json = [](const Eigen::MatrixXd& x) {
    ojson rows = ojson::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      ojson row = ojson::array();
      for (Eigen::Index j = 0; j < x.cols(); ++j) row.push_back(x(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  ojson j;
  j["measures"] = kMeasureNames;
  j["measures_normalized"] = c.normalize_measures;
  j["betweenness_omitted"] = m.betweenness_omitted;
  j["averaged"] = matrix_json(ex.averaged);
  ojson dom = ojson::array();
  for (Eigen::Index k = 0; k < ex.averaged.rows(); ++k) {
    const auto d = dominant_measure(ex, static_cast<std::size_t>(k));
    dom.push_back({{"role", k}, {"measure", d.name}, {"degenerate", d.degenerate}});
  }
  j["dominant"] = dom;
  j["skipped"] = ex.skipped;
  ojson per = ojson::array();
  for (std::size_t i = 0; i < ex.timesteps.size(); ++i)
    per.push_back({{"t", ex.timesteps[i]}, {"residual", ex.residuals[i]}, {"E", matrix_json(ex.per_timestep[i])}});
  j["per_timestep"] = per;
  ctx.emit(kInterpretation, j.dump(2) + "\n");
}

void stage_report(StageContext& ctx, RunManifest& m) {
  const RunConfig& c = m.config;
  const auto& seq = ctx.sequence();
  const auto memberships = ctx.memberships();
  std::size_t r = 0;
  for (const auto& g : memberships) r = std::max(r, g.rank());
  if (r == 0) throw InsufficientDataError("no roles to report");

  std::vector<std::string> labels;
  if (fs::exists(ctx.dir() / kInterpretation)) {
    try {
      const auto j = ojson::parse(read_file(ctx.dir() / kInterpretation));
      for (const auto& d : j.at("dominant")) labels.push_back(d.at("measure").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("interpretation: ") + e.what());
    }
  }
  const auto series = role_importance_series(memberships, r);
  ctx.emit(kNetworkSvg, svg::plot_network_dynamics(series, labels));

  auto changes = all_change_scores(memberships, seq.nodes().size(), c.change_metric, c.workers);
  std::stable_sort(changes.begin(), changes.end(),
                   [](const NodeChange& a, const NodeChange& b) { return a.scores.max_score > b.scores.max_score; });
  std::vector<NodeId> chosen;
  for (const auto& ch : changes) {
    if (chosen.size() >= c.plot_nodes) break;
    chosen.push_back(ch.node);
  }
  for (NodeId v = 0; chosen.empty() && v < seq.nodes().size(); ++v) chosen.push_back(v);
  std::vector<NodeTrajectory> trajs;
  std::vector<std::string> names;
  for (NodeId v : chosen) {
    trajs.push_back(node_trajectory(memberships, v, seq.nodes().size()));
    names.push_back(seq.nodes().label(v));
  }
  ctx.emit(kNodeSvg, svg::plot_node_dynamics(trajs, names, labels));
}

void record_timing(RunManifest& m, std::string_view stage, double seconds) {
  auto it = std::find_if(m.timings.begin(), m.timings.end(), [&](const StageTiming& t) { return t.stage == stage; });
  if (it != m.timings.end()) it->seconds = seconds;
  else m.timings.push_back({std::string(stage), seconds});
}

void run_one(Stage stage, StageContext& ctx, RunManifest& m) {
  const auto start = std::chrono::steady_clock::now();
  const std::string name(to_string(stage));
  m.failed_stage.clear();
  m.error.clear();
  try {
    switch (stage) {
      case Stage::Ingest: stage_ingest(ctx, m); break;
      case Stage::Features: stage_features(ctx, m); break;
      case Stage::Roles: stage_roles(ctx, m); break;
      case Stage::Track: stage_track(ctx, m); break;
      case Stage::Interpret: stage_interpret(ctx, m); break;
      case Stage::Report: stage_report(ctx, m); break;
    }
  } catch (const std::exception& e) {
    m.failed_stage = name;
    m.error = e.what();
    save_manifest(m, ctx.dir());
    throw;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  record_timing(m, name, elapsed.count());
  if (std::find(m.completed_stages.begin(), m.completed_stages.end(), name) == m.completed_stages.end())
    m.completed_stages.push_back(name);
  save_manifest(m, ctx.dir());
  spdlog::info("stage {} finished in {:.3f} s", name, elapsed.count());
}

void prepare_dir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create " + config.output_dir.string() + ": " + ec.message());
}

}  // namespace

RunManifest run_stage(Stage stage, const RunConfig& config) {
  config.validate();
  prepare_dir(config);
  RunManifest m = load_manifest(config.output_dir, config);
  StageContext ctx(m.config, m);
  run_one(stage, ctx, m);
  return m;
}

RunManifest run_pipeline(const RunConfig& config) {
  config.validate();
  prepare_dir(config);
  RunManifest m;
  m.config = config;
  StageContext ctx(m.config, m);
  for (Stage s : kAllStages) run_one(s, ctx, m);
  return m;
}

}  // namespace roledyn
