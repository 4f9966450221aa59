#include "roledyn/interpretation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <spdlog/spdlog.h>

#include "roledyn/errors.hpp"
#include "roledyn/nnls.hpp"
#include "roledyn/parallel.hpp"
#include "roledyn/text.hpp"

namespace roledyn {

Eigen::VectorXd betweenness_centrality(const SnapshotGraph& g) {
  const auto n = static_cast<std::uint32_t>(g.node_count());
  Eigen::VectorXd cb = Eigen::VectorXd::Zero(n);
  std::vector<std::uint32_t> order, queue;
  std::vector<std::vector<std::uint32_t>> preds(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<std::int64_t> dist(n);
  order.reserve(n);
  queue.reserve(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    order.clear();
    queue.clear();
    for (std::uint32_t v = 0; v < n; ++v) {
      preds[v].clear();
      sigma[v] = 0;
      delta[v] = 0;
      dist[v] = -1;
    }
    sigma[s] = 1;
    dist[s] = 0;
    queue.push_back(s);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto v = queue[head];
      order.push_back(v);
      for (auto w : g.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto w = *it;
      for (auto v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  return cb / 2.0;
}

Eigen::VectorXd biconnected_counts(const SnapshotGraph& g) {
  const auto n = static_cast<std::uint32_t>(g.node_count());
  Eigen::VectorXd count = Eigen::VectorXd::Zero(n);
  constexpr std::uint32_t none = UINT32_MAX;
  std::vector<std::uint32_t> disc(n, none), low(n, 0), parent(n, none);
  std::vector<std::size_t> cursor(n, 0);
  std::vector<std::uint32_t> stack;
  std::uint32_t clock = 0;

  for (std::uint32_t root = 0; root < n; ++root) {
    if (disc[root] != none) continue;
    disc[root] = low[root] = clock++;
    stack.push_back(root);
    while (!stack.empty()) {
      const auto u = stack.back();
      const auto nb = g.neighbors(u);
      if (cursor[u] < nb.size()) {
        const auto v = nb[cursor[u]++];
        if (disc[v] == none) {
          parent[v] = u;
          disc[v] = low[v] = clock++;
          stack.push_back(v);
        } else if (v != parent[u]) {
          low[u] = std::min(low[u], disc[v]);
        }
        continue;
      }
      stack.pop_back();
      const auto p = parent[u];
      if (p == none) continue;
      low[p] = std::min(low[p], low[u]);
      // u's subtree closes a block containing p.
      if (low[u] >= disc[p]) count[p] += 1;
      // Every non-root node sits in the block of its parent edge.
      count[u] += 1;
    }
  }
  return count;
}

Eigen::VectorXd pagerank_step(const SnapshotGraph& g, const Eigen::VectorXd& p, double damping) {
  const auto n = static_cast<std::uint32_t>(g.node_count());
  Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
  double dangling = 0;
  for (std::uint32_t u = 0; u < n; ++u) {
    double w = 0;
    for (const auto& a : g.out_arcs(u)) w += a.weight;
    if (w <= 0) {
      dangling += p[u];
      continue;
    }
    for (const auto& a : g.out_arcs(u)) next[a.target] += p[u] * a.weight / w;
  }
  const double base = ((1.0 - damping) + damping * dangling) / n;
  return (damping * next).array() + base;
}

Eigen::VectorXd pagerank(const SnapshotGraph& g, const PageRankOptions& options) {
  const auto n = g.node_count();
  if (n == 0) return {};
  if (!(options.damping >= 0 && options.damping < 1)) throw ArgumentError("pagerank damping must lie in [0, 1)");
  Eigen::VectorXd p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    Eigen::VectorXd next = pagerank_step(g, p, options.damping);
    next /= next.sum();
    const double change = (next - p).lpNorm<1>();
    p = std::move(next);
    if (change < options.tol) return p;
  }
  throw NumericalError("pagerank did not converge in " + std::to_string(options.max_iters) + " iterations");
}

Eigen::VectorXd clustering_coefficient(const SnapshotGraph& g) {
  const auto n = static_cast<std::uint32_t>(g.node_count());
  Eigen::VectorXd cc = Eigen::VectorXd::Zero(n);
  std::vector<std::uint32_t> mark(n, UINT32_MAX);
  for (std::uint32_t u = 0; u < n; ++u) {
    const auto nb = g.neighbors(u);
    const double k = static_cast<double>(nb.size());
    if (nb.size() < 2) continue;
    for (auto v : nb) mark[v] = u;
    std::size_t links = 0;
    for (auto v : nb)
      for (auto w : g.neighbors(v))
        if (w > v && mark[w] == u) ++links;
    cc[u] = 2.0 * static_cast<double>(links) / (k * (k - 1));
  }
  return cc;
}

NodeMeasureMatrix compute_node_measures(const SnapshotGraph& g, const MeasureOptions& options) {
  NodeMeasureMatrix m;
  m.timestep = g.index();
  m.nodes.assign(g.active_nodes().begin(), g.active_nodes().end());
  const auto n = static_cast<Eigen::Index>(g.node_count());
  m.raw = Eigen::MatrixXd::Zero(n, kMeasureCount);
  if (n > 0) {
    if (g.node_count() <= options.betweenness_node_cap) {
      m.raw.col(0) = betweenness_centrality(g);
    } else {
      m.betweenness_omitted = true;
    }
    m.raw.col(1) = biconnected_counts(g);
    m.raw.col(2) = pagerank(g, options.pagerank);
    m.raw.col(3) = clustering_coefficient(g);
    for (Eigen::Index u = 0; u < n; ++u) {
      const auto lu = static_cast<std::uint32_t>(u);
      m.raw(u, 4) = static_cast<double>(g.out_arcs(lu).size() + g.in_arcs(lu).size());
    }
  }
  m.values = m.raw;
  m.normalized = options.normalize;
  if (options.normalize && n > 0) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      const double mx = m.values.col(j).maxCoeff();
      if (mx > 0) m.values.col(j) /= mx;
    }
  }
  return m;
}

RoleExplanation interpret_roles(std::span<const MembershipMatrix> memberships,
                                std::span<const NodeMeasureMatrix> measures, std::size_t workers) {
  if (memberships.size() != measures.size())
    throw SchemaError("interpret_roles: " + std::to_string(memberships.size()) + " membership matrices but " +
                      std::to_string(measures.size()) + " measure matrices");
  std::size_t r = 0;
  for (const auto& g : memberships) r = std::max(r, g.rank());
  if (r == 0) throw InsufficientDataError("interpret_roles: no roles to explain");

  struct Fit {
    bool used = false;
    Eigen::MatrixXd E;
    double residual = 0;
  };
  std::vector<Fit> fits(memberships.size());
  parallel_for(memberships.size(), workers, [&](std::size_t i) {
    const auto& G = memberships[i];
    const auto& M = measures[i];
    if (G.nodes != M.nodes)
      throw SchemaError("interpret_roles: row order differs at timestep " + std::to_string(G.timestep));
    if (G.rows() < r) return;
    if (G.rank() != r) throw SchemaError("interpret_roles: rank differs at timestep " + std::to_string(G.timestep));
    const Eigen::MatrixXd gram = G.values.transpose() * G.values;
    const Eigen::MatrixXd gtm = G.values.transpose() * M.values;
    Fit& fit = fits[i];
    fit.E.resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(kMeasureCount));
    for (Eigen::Index j = 0; j < fit.E.cols(); ++j) fit.E.col(j) = nnls_gram(gram, gtm.col(j));
    fit.residual = (G.values * fit.E - M.values).norm();
    fit.used = true;
  });

  RoleExplanation out;
  out.averaged = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(kMeasureCount));
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (!fits[i].used) {
      out.skipped.push_back(memberships[i].timestep);
      continue;
    }
    out.timesteps.push_back(memberships[i].timestep);
    out.averaged += fits[i].E;
    out.per_timestep.push_back(std::move(fits[i].E));
    out.residuals.push_back(fits[i].residual);
  }
  if (out.timesteps.empty())
    throw InsufficientDataError("interpret_roles: every timestep has fewer active nodes than roles (" +
                                std::to_string(r) + ")");
  if (!out.skipped.empty())
    spdlog::warn("interpretation skipped {} timestep(s) with fewer than {} active nodes", out.skipped.size(), r);
  out.averaged /= static_cast<double>(out.timesteps.size());
  return out;
}

DominantMeasure dominant_measure(const RoleExplanation& explanation, std::size_t role) {
  if (role >= static_cast<std::size_t>(explanation.averaged.rows()))
    throw LookupError("role " + std::to_string(role) + " is not in the explanation");
  const auto row = explanation.averaged.row(static_cast<Eigen::Index>(role));
  DominantMeasure d;
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  d.column = static_cast<std::size_t>(best);
  d.name = kMeasureNames[d.column];
  for (Eigen::Index j = 0; j < row.size(); ++j)
    if (j != best && row[j] == row[best]) d.degenerate = true;
  return d;
}

void write_explanation_csv(std::ostream& out, const RoleExplanation& explanation) {
  out << "role,measure,contribution\n";
  for (Eigen::Index k = 0; k < explanation.averaged.rows(); ++k)
    for (std::size_t j = 0; j < kMeasureCount; ++j)
      out << k << ',' << text::csv_field(kMeasureNames[j]) << ','
          << text::format_double(explanation.averaged(k, static_cast<Eigen::Index>(j))) << '\n';
}

void write_measure_csv(std::ostream& out, std::span<const NodeMeasureMatrix> measures, const NodeDictionary& nodes) {
  out << "t,node";
  for (auto name : kMeasureNames) out << ',' << text::csv_field(name);
  out << '\n';
  for (const auto& m : measures)
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
      out << m.timestep << ',' << text::csv_field(nodes.label(m.nodes[i]));
      for (Eigen::Index j = 0; j < m.raw.cols(); ++j)
        out << ',' << text::format_double(m.raw(static_cast<Eigen::Index>(i), j));
      out << '\n';
    }
}

}  // namespace roledyn
