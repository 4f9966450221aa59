#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roledyn/dynamics.hpp"
#include "roledyn/roles.hpp"
#include "roledyn/temporal_graph.hpp"

namespace roledyn {

enum class RunMode { GlobalBasis, PerTimestepRefit };

std::string_view to_string(RunMode m);
RunMode parse_run_mode(std::string_view name);

struct RunConfig {
  std::filesystem::path input;
  std::string schema = "src,dst,time";
  bool strict = true;
  bool skip_header = false;

  double window_width = 1.0;
  std::optional<double> origin;
  Aggregation aggregation = Aggregation::Sum;
  bool keep_self_loops = false;

  std::size_t bins = 0;  // 0 derives the bin count per snapshot
  std::size_t max_depth = 6;

  std::size_t nmf_max_iters = 200;
  double nmf_tol = 1e-6;
  std::size_t nmf_inner_iters = 5;  // multiplicative steps per factor per iteration
  std::size_t restarts = 3;
  std::uint64_t seed = 1;

  std::size_t r_min = 1;
  std::size_t r_max = 8;
  std::size_t bits = 4;
  std::size_t precision_bits = 16;
  MdlErrorModel error_model = MdlErrorModel::SquaredError;

  RunMode mode = RunMode::GlobalBasis;
  DistanceMetric change_metric = DistanceMetric::Hellinger;

  bool normalize_measures = true;
  std::size_t betweenness_node_cap = 50'000;
  std::size_t plot_nodes = 20;  // nodes shown in the node-dynamics plot

  std::size_t workers = 1;  // 0 = hardware concurrency
  std::filesystem::path output_dir = "roledyn_out";

  /// Throws ArgumentError naming the first out-of-range field.
  void validate() const;
  MdlOptions mdl_options() const;

  std::string to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static RunConfig from_json(std::string_view json);

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

enum class Stage { Ingest, Features, Roles, Track, Interpret, Report };

inline constexpr Stage kAllStages[] = {Stage::Ingest, Stage::Features, Stage::Roles,
                                       Stage::Track,  Stage::Interpret, Stage::Report};

std::string_view to_string(Stage s);

struct Artifact {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct StageTiming {
  std::string stage;
  double seconds = 0;
};

struct RunManifest {
  RunConfig config;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;   // aggregated snapshot edges summed over time
  std::size_t input_edges = 0;  // parsed temporal edges
  std::size_t malformed_lines = 0;
  std::size_t t_max = 0;
  std::vector<std::size_t> active_nodes;  // n_t series
  std::size_t feature_count = 0;
  std::size_t rank = 0;  // selected r (global) or track count (refit)
  std::vector<MdlScore> mdl_trace;
  std::vector<std::size_t> betweenness_omitted;  // timesteps over the node cap
  std::vector<std::size_t> interpretation_skipped;
  std::vector<std::string> completed_stages;
  std::vector<StageTiming> timings;
  std::vector<Artifact> artifacts;
  std::string failed_stage;
  std::string error;

  std::string to_json() const;
  static RunManifest from_json(std::string_view json);
};

inline constexpr const char* kManifestFile = "manifest.json";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Loads `dir`/manifest.json, or returns a fresh manifest for `config`.
RunManifest load_manifest(const std::filesystem::path& dir, const RunConfig& config);
void save_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

/// Checks that every listed artifact exists with the recorded checksum;
/// returns the paths that do not.
std::vector<std::string> verify_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

/// Runs one stage against the artifacts already in config.output_dir and
/// updates the manifest there. On failure the manifest records the stage
/// and message before the error propagates.
RunManifest run_stage(Stage stage, const RunConfig& config);

/// All stages in order.
RunManifest run_pipeline(const RunConfig& config);

}  // namespace roledyn
