#include "roledyn/synthetic.hpp"

#include <numeric>
#include <ostream>
#include <unordered_set>

#include "roledyn/errors.hpp"
#include "roledyn/nmf.hpp"
#include "roledyn/text.hpp"

namespace roledyn::synth {

namespace {

TemporalEdgeSet with_nodes(std::size_t n) {
  TemporalEdgeSet set;
  for (std::size_t i = 0; i < n; ++i) set.nodes.intern("n" + std::to_string(i));
  return set;
}

void add_pair(TemporalEdgeSet& set, std::size_t u, std::size_t v, std::size_t t) {
  const auto time = static_cast<Timestamp>(t - 1);
  set.edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), 1.0, time, time});
  set.edges.push_back({static_cast<NodeId>(v), static_cast<NodeId>(u), 1.0, time, time});
}

template <typename T>
void shuffle(std::vector<T>& v, UnitRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.next_u64() % i]);
}

}  // namespace

TemporalEdgeSet planted_roles(const PlantedRoleOptions& o) {
  if (o.star_leaves < 1 || o.clique_size < 3 || o.timesteps < 1)
    throw ArgumentError("planted_roles needs star_leaves >= 1, clique_size >= 3 and timesteps >= 1");
  const std::size_t n = o.stars * (o.star_leaves + 1) + o.cliques * o.clique_size;
  TemporalEdgeSet set = with_nodes(n);
  UnitRng rng(o.seed);
  std::vector<std::size_t> perm(n);
  for (std::size_t t = 1; t <= o.timesteps; ++t) {
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, rng);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < o.stars; ++s) {
      const auto hub = perm[pos++];
      for (std::size_t k = 0; k < o.star_leaves; ++k) add_pair(set, hub, perm[pos++], t);
    }
    for (std::size_t c = 0; c < o.cliques; ++c) {
      for (std::size_t a = 0; a < o.clique_size; ++a)
        for (std::size_t b = a + 1; b < o.clique_size; ++b) add_pair(set, perm[pos + a], perm[pos + b], t);
      pos += o.clique_size;
    }
  }
  return set;
}

TemporalEdgeSet star_clique_composite(std::size_t leaves, std::size_t clique_size) {
  TemporalEdgeSet set = with_nodes(leaves + 1 + clique_size);
  for (std::size_t k = 1; k <= leaves; ++k) add_pair(set, 0, k, 1);
  for (std::size_t a = 0; a < clique_size; ++a)
    for (std::size_t b = a + 1; b < clique_size; ++b) add_pair(set, leaves + 1 + a, leaves + 1 + b, 1);
  return set;
}

TemporalEdgeSet change_point(const ChangePointOptions& o) {
  if (o.stable_hubs < 1 || o.timesteps < 1) throw ArgumentError("change_point needs stable hubs and timesteps");
  const std::size_t n = o.switchers + o.stable_hubs + o.periphery;
  TemporalEdgeSet set = with_nodes(n);
  UnitRng rng(o.seed);
  std::vector<std::size_t> hubs, leaves;
  for (std::size_t t = 1; t <= o.timesteps; ++t) {
    hubs.clear();
    leaves.clear();
    const bool after = t >= o.change_at;
    for (std::size_t i = 0; i < o.switchers; ++i) (after ? leaves : hubs).push_back(i);
    for (std::size_t i = 0; i < o.stable_hubs; ++i) hubs.push_back(o.switchers + i);
    for (std::size_t i = 0; i < o.periphery; ++i) leaves.push_back(o.switchers + o.stable_hubs + i);
    shuffle(leaves, rng);
    // Round-robin keeps hub degrees within one of each other.
    for (std::size_t k = 0; k < leaves.size(); ++k) add_pair(set, hubs[k % hubs.size()], leaves[k], t);
    const std::size_t base = o.switchers + o.stable_hubs;
    for (std::size_t e = 0; e < o.noise_edges && o.periphery > 1; ++e) {
      const auto u = base + rng.next_u64() % o.periphery;
      auto v = base + rng.next_u64() % o.periphery;
      if (u == v) v = base + (v - base + 1) % o.periphery;
      set.edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), 1.0, static_cast<Timestamp>(t - 1),
                           static_cast<Timestamp>(t - 1)});
    }
  }
  return set;
}

TemporalEdgeSet random_temporal(std::size_t edges_per_step, std::size_t timesteps, std::uint64_t seed) {
  const std::size_t n = std::max<std::size_t>(2, edges_per_step / 2);
  if (edges_per_step > n * (n - 1)) throw ArgumentError("random_temporal: too many edges for the node count");
  TemporalEdgeSet set = with_nodes(n);
  UnitRng rng(seed);
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t t = 1; t <= timesteps; ++t) {
    seen.clear();
    while (seen.size() < edges_per_step) {
      const auto u = rng.next_u64() % n;
      const auto v = rng.next_u64() % n;
      if (u == v || !seen.insert(u * n + v).second) continue;
      const auto time = static_cast<Timestamp>(t - 1);
      set.edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), 1.0, time, time});
    }
  }
  return set;
}

void write_edge_list(std::ostream& out, const TemporalEdgeSet& edges) {
  for (const auto& e : edges.edges) {
    out << edges.nodes.label(e.src) << ' ' << edges.nodes.label(e.dst) << ' ' << text::format_double(e.begin) << ' '
        << text::format_double(e.weight) << '\n';
  }
}

}  // namespace roledyn::synth
