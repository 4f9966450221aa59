// roledyn: structural role dynamics of temporal networks.
//
//   roledyn all --input edges.txt --window 3600 --out run/
//   roledyn ingest|features|roles|track|interpret|report [flags]
//   roledyn synth planted --out edges.txt
//   roledyn verify --out run/
//
// Exit codes: 0 success, 1 usage, 2 data, 3 numerical.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "roledyn/errors.hpp"
#include "roledyn/pipeline.hpp"
#include "roledyn/synthetic.hpp"

namespace {

using namespace roledyn;

/// Flag values are captured separately and applied over the config file, so
/// that only flags the user actually passed override it.
struct ConfigFlags {
  std::string config_file;
  std::string input, schema, aggregation, error_model, mode, metric, out;
  double window = 0, origin = 0, tol = 0;
  std::size_t bins = 0, depth = 0, iters = 0, inner = 0, restarts = 0, r_min = 0, r_max = 0, bits = 0, precision = 0,
              cap = 0, plot_nodes = 0, workers = 0;
  std::uint64_t seed = 0;
  bool lenient = false, header = false, self_loops = false, raw_measures = false;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> setters;

  template <typename T>
  void add(CLI::App* app, const std::string& name, T& slot, const std::string& help,
           std::function<void(RunConfig&)> apply) {
    setters.emplace_back(app->add_option(name, slot, help), std::move(apply));
  }
  void flag(CLI::App* app, const std::string& name, bool& slot, const std::string& help,
            std::function<void(RunConfig&)> apply) {
    setters.emplace_back(app->add_flag(name, slot, help), std::move(apply));
  }

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config; explicit flags override it")->check(CLI::ExistingFile);
    add(app, "-i,--input", input, "edge list", [this](RunConfig& c) { c.input = input; });
    add(app, "--schema", schema, "column names, e.g. src,dst,time,weight or src,dst,begin,end",
        [this](RunConfig& c) { c.schema = schema; });
    flag(app, "--lenient", lenient, "skip malformed lines instead of failing",
         [this](RunConfig& c) { c.strict = !lenient; });
    flag(app, "--header", header, "input has a header line", [this](RunConfig& c) { c.skip_header = header; });
    add(app, "-w,--window", window, "snapshot window width", [this](RunConfig& c) { c.window_width = window; });
    add(app, "--origin", origin, "time of the first window start", [this](RunConfig& c) { c.origin = origin; });
    add(app, "--aggregation", aggregation, "sum, max or count",
        [this](RunConfig& c) { c.aggregation = parse_aggregation(aggregation); });
    flag(app, "--self-loops", self_loops, "keep self-loops",
         [this](RunConfig& c) { c.keep_self_loops = self_loops; });
    add(app, "--bins", bins, "log-binning levels (0 derives them)", [this](RunConfig& c) { c.bins = bins; });
    add(app, "--max-depth", depth, "recursion depth cap (<= 6)", [this](RunConfig& c) { c.max_depth = depth; });
    add(app, "--nmf-iters", iters, "NMF iteration cap", [this](RunConfig& c) { c.nmf_max_iters = iters; });
    add(app, "--nmf-inner", inner, "multiplicative steps per factor per NMF iteration",
        [this](RunConfig& c) { c.nmf_inner_iters = inner; });
    add(app, "--nmf-tol", tol, "NMF relative tolerance", [this](RunConfig& c) { c.nmf_tol = tol; });
    add(app, "--restarts", restarts, "NMF restarts per rank", [this](RunConfig& c) { c.restarts = restarts; });
    add(app, "--seed", seed, "random seed (env ROLEDYN_SEED)", [this](RunConfig& c) { c.seed = seed; });
    add(app, "--r-min", r_min, "smallest rank scanned", [this](RunConfig& c) { c.r_min = r_min; });
    add(app, "--r-max", r_max, "largest rank scanned", [this](RunConfig& c) { c.r_max = r_max; });
    add(app, "--bits", bits, "MDL bits per model value", [this](RunConfig& c) { c.bits = bits; });
    add(app, "--precision-bits", precision, "MDL residual precision",
        [this](RunConfig& c) { c.precision_bits = precision; });
    add(app, "--error-model", error_model, "squared or kl",
        [this](RunConfig& c) { c.error_model = parse_mdl_error_model(error_model); });
    add(app, "--mode", mode, "global-basis or per-timestep-refit",
        [this](RunConfig& c) { c.mode = parse_run_mode(mode); });
    add(app, "--metric", metric, "change metric: hellinger, cosine or euclidean",
        [this](RunConfig& c) { c.change_metric = parse_distance_metric(metric); });
    flag(app, "--raw-measures", raw_measures, "regress on unnormalised node measures",
         [this](RunConfig& c) { c.normalize_measures = !raw_measures; });
    add(app, "--betweenness-cap", cap, "skip betweenness above this many nodes",
        [this](RunConfig& c) { c.betweenness_node_cap = cap; });
    add(app, "--plot-nodes", plot_nodes, "nodes in the node-dynamics plot",
        [this](RunConfig& c) { c.plot_nodes = plot_nodes; });
    add(app, "-j,--workers", workers, "worker threads, 0 = all cores (env ROLEDYN_WORKERS)",
        [this](RunConfig& c) { c.workers = workers; });
    add(app, "-o,--out", out, "output directory", [this](RunConfig& c) { c.output_dir = out; });
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw IoError("cannot open " + config_file);
      std::stringstream ss;
      ss << in.rdbuf();
      c = RunConfig::from_json(ss.str());
    }
    if (const char* s = std::getenv("ROLEDYN_SEED")) {
      auto v = std::strtoull(s, nullptr, 10);
      c.seed = v;
    }
    if (const char* s = std::getenv("ROLEDYN_WORKERS")) c.workers = std::strtoull(s, nullptr, 10);
    for (const auto& [opt, apply] : setters)
      if (opt->count() > 0) apply(c);
    return c;
  }
};

struct SynthFlags {
  std::string kind = "planted";
  std::string out;
  std::uint64_t seed = 1;
  std::size_t timesteps = 20;
  std::size_t edges = 10'000;
};

int run_synth(const SynthFlags& f) {
  TemporalEdgeSet set;
  if (f.kind == "planted") {
    synth::PlantedRoleOptions o;
    o.timesteps = f.timesteps;
    o.seed = f.seed;
    set = synth::planted_roles(o);
  } else if (f.kind == "change-point") {
    synth::ChangePointOptions o;
    o.timesteps = f.timesteps;
    o.seed = f.seed;
    set = synth::change_point(o);
  } else if (f.kind == "random") {
    set = synth::random_temporal(f.edges, f.timesteps, f.seed);
  } else {
    set = synth::star_clique_composite();
  }
  if (f.out.empty() || f.out == "-") {
    synth::write_edge_list(std::cout, set);
  } else {
    std::ofstream out(f.out, std::ios::binary);
    if (!out) throw IoError("cannot write " + f.out);
    synth::write_edge_list(out, set);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural role dynamics of temporal networks"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log stage progress");

  struct Sub {
    CLI::App* app;
    std::optional<Stage> stage;  // nullopt = full pipeline
    ConfigFlags flags;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  auto add_stage = [&](const std::string& name, const std::string& help, std::optional<Stage> stage) {
    auto s = std::make_unique<Sub>();
    s->app = app.add_subcommand(name, help);
    s->stage = stage;
    s->flags.attach(s->app);
    subs.push_back(std::move(s));
  };
  add_stage("all", "run every stage", std::nullopt);
  add_stage("ingest", "parse edges and bin snapshots", Stage::Ingest);
  add_stage("features", "learn and extract recursive features", Stage::Features);
  add_stage("roles", "discover roles with MDL rank selection", Stage::Roles);
  add_stage("track", "estimate memberships, importance and change scores", Stage::Track);
  add_stage("interpret", "explain roles with node measures", Stage::Interpret);
  add_stage("report", "write SVG plots", Stage::Report);

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "write a synthetic temporal edge list");
  synth->add_option("kind", synth_flags.kind, "planted, change-point, random or star-clique")
      ->check(CLI::IsMember({"planted", "change-point", "random", "star-clique"}));
  synth->add_option("-o,--out", synth_flags.out, "output file (default stdout)");
  synth->add_option("--seed", synth_flags.seed, "random seed");
  synth->add_option("--timesteps", synth_flags.timesteps, "number of timesteps")->check(CLI::PositiveNumber);
  synth->add_option("--edges", synth_flags.edges, "arcs per timestep (random)")->check(CLI::PositiveNumber);

  std::string verify_dir;
  auto* verify = app.add_subcommand("verify", "check artifact checksums against the manifest");
  verify->add_option("-o,--out", verify_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (synth->parsed()) return run_synth(synth_flags);
    if (verify->parsed()) {
      const RunManifest m = load_manifest(verify_dir, RunConfig{});
      const auto bad = verify_manifest(m, verify_dir);
      for (const auto& p : bad) std::cerr << "checksum mismatch: " << p << '\n';
      if (!bad.empty()) return 2;
      std::cout << m.artifacts.size() << " artifacts verified\n";
      return 0;
    }
    for (const auto& s : subs) {
      if (!s->app->parsed()) continue;
      const RunConfig config = s->flags.resolve();
      const RunManifest m = s->stage ? run_stage(*s->stage, config) : run_pipeline(config);
      std::cout << "completed:";
      for (const auto& st : m.completed_stages) std::cout << ' ' << st;
      std::cout << "\nnodes " << m.node_count << ", t_max " << m.t_max << ", features " << m.feature_count
                << ", rank " << m.rank << "\noutput " << config.output_dir.string() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "roledyn: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "roledyn: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
