#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "roledyn/temporal_graph.hpp"

namespace roledyn::synth {

/// Edges of timestep t carry the instant t - 1, so binning with width 1 and
/// origin 0 recovers the generated snapshots. Node labels are "n<id>".
struct PlantedRoleOptions {
  std::size_t stars = 20;
  std::size_t star_leaves = 6;
  std::size_t cliques = 12;
  std::size_t clique_size = 5;
  std::size_t timesteps = 20;
  std::uint64_t seed = 1;
};

/// Disjoint stars and cliques; node positions are reshuffled every timestep,
/// so nodes move between the hub, leaf and clique roles.
TemporalEdgeSet planted_roles(const PlantedRoleOptions& options = {});

/// One K_{1,leaves} star plus one K_size clique in a single timestep.
/// Nodes 0..leaves form the star (0 is the hub); the rest form the clique.
TemporalEdgeSet star_clique_composite(std::size_t leaves = 5, std::size_t clique_size = 5);

struct ChangePointOptions {
  std::size_t switchers = 30;     // ids [0, switchers)
  std::size_t stable_hubs = 30;   // next ids
  std::size_t periphery = 240;    // remaining ids
  std::size_t timesteps = 20;
  std::size_t change_at = 10;     // first timestep with the new structure
  std::size_t noise_edges = 10;   // random periphery-periphery edges per timestep
  std::uint64_t seed = 1;
};

/// Hubs (switchers and stable hubs) each receive an equal share of the
/// periphery as leaves; from `change_at` on the switchers become leaves of
/// the stable hubs.
TemporalEdgeSet change_point(const ChangePointOptions& options = {});

/// `edges_per_step` distinct random arcs over edges_per_step / 2 nodes at
/// each of `timesteps` steps.
TemporalEdgeSet random_temporal(std::size_t edges_per_step, std::size_t timesteps, std::uint64_t seed = 1);

/// Writes "src dst time weight" lines, ingestible with schema "src,dst,time,weight".
void write_edge_list(std::ostream& out, const TemporalEdgeSet& edges);

}  // namespace roledyn::synth
