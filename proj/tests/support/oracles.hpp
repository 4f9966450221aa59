#pragma once

// Independent reference implementations used as test oracles. They favour
// obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "roledyn/temporal_graph.hpp"

namespace oracle {

using Pairs = std::vector<std::pair<int, int>>;

/// Snapshot with both arc directions for every pair; nodes are 0..n-1.
inline roledyn::SnapshotGraph undirected(const Pairs& pairs, std::size_t index = 1) {
  std::vector<roledyn::WeightedEdge> edges;
  for (auto [u, v] : pairs) {
    edges.push_back({static_cast<roledyn::NodeId>(u), static_cast<roledyn::NodeId>(v), 1.0});
    edges.push_back({static_cast<roledyn::NodeId>(v), static_cast<roledyn::NodeId>(u), 1.0});
  }
  return roledyn::SnapshotGraph(index, std::move(edges));
}

inline roledyn::SnapshotGraph directed(const Pairs& pairs, std::size_t index = 1) {
  std::vector<roledyn::WeightedEdge> edges;
  for (auto [u, v] : pairs)
    edges.push_back({static_cast<roledyn::NodeId>(u), static_cast<roledyn::NodeId>(v), 1.0});
  return roledyn::SnapshotGraph(index, std::move(edges));
}

inline std::vector<std::vector<int>> adjacency(int n, const Pairs& pairs) {
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
  for (auto [u, v] : pairs) a[u][v] = a[v][u] = 1;
  return a;
}

inline bool connected(int n, const Pairs& pairs) {
  auto a = adjacency(n, pairs);
  std::vector<int> seen(n, 0), stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v)
      if (a[u][v] && !seen[v]) seen[v] = 1, stack.push_back(v);
  }
  return std::count(seen.begin(), seen.end(), 1) == n;
}

/// Betweenness from walk counts: the number of walks of length d(s,t) from s
/// to t equals the number of shortest paths, and a shortest s-t path through
/// v splits into shortest s-v and v-t paths. O(n^4); fine up to n = 8.
inline std::vector<double> betweenness(int n, const Pairs& pairs) {
  auto a = adjacency(n, pairs);
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  std::vector<std::vector<double>> sigma(n, std::vector<double>(n, 0));
  std::vector<std::vector<double>> walks(n, std::vector<double>(n, 0));
  for (int i = 0; i < n; ++i) walks[i][i] = 1, dist[i][i] = 0, sigma[i][i] = 1;
  for (int len = 1; len < n; ++len) {
    std::vector<std::vector<double>> next(n, std::vector<double>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        if (walks[i][k] != 0)
          for (int j = 0; j < n; ++j) next[i][j] += walks[i][k] * a[k][j];
    walks = next;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (dist[i][j] < 0 && walks[i][j] > 0) dist[i][j] = len, sigma[i][j] = walks[i][j];
  }
  std::vector<double> cb(n, 0.0);
  for (int v = 0; v < n; ++v)
    for (int s = 0; s < n; ++s)
      for (int t = s + 1; t < n; ++t) {
        if (s == v || t == v || dist[s][t] < 0 || dist[s][v] < 0 || dist[v][t] < 0) continue;
        if (dist[s][v] + dist[v][t] == dist[s][t]) cb[v] += sigma[s][v] * sigma[v][t] / sigma[s][t];
      }
  return cb;
}

/// Blocks containing v = components of G - v that contain a neighbour of v.
inline std::vector<double> block_counts(int n, const Pairs& pairs) {
  auto a = adjacency(n, pairs);
  std::vector<double> out(n, 0);
  for (int v = 0; v < n; ++v) {
    std::vector<int> comp(n, -1);
    int c = 0;
    for (int s = 0; s < n; ++s) {
      if (s == v || comp[s] >= 0) continue;
      std::vector<int> stack{s};
      comp[s] = c;
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int w = 0; w < n; ++w)
          if (w != v && a[u][w] && comp[w] < 0) comp[w] = c, stack.push_back(w);
      }
      ++c;
    }
    std::vector<int> touched;
    for (int w = 0; w < n; ++w)
      if (a[v][w]) touched.push_back(comp[w]);
    std::sort(touched.begin(), touched.end());
    out[v] = static_cast<double>(std::unique(touched.begin(), touched.end()) - touched.begin());
  }
  return out;
}

/// Every labelled simple graph on n nodes, as pair lists.
inline std::vector<Pairs> all_graphs(int n) {
  Pairs slots;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) slots.emplace_back(u, v);
  std::vector<Pairs> out;
  for (std::uint32_t mask = 0; mask < (1u << slots.size()); ++mask) {
    Pairs p;
    for (std::size_t i = 0; i < slots.size(); ++i)
      if (mask >> i & 1u) p.push_back(slots[i]);
    out.push_back(std::move(p));
  }
  return out;
}

inline Pairs random_graph(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  Pairs out;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (coin(rng)) out.emplace_back(u, v);
  return out;
}

/// Brute-force NNLS by enumerating passive sets (k <= ~10): the optimum is
/// the best feasible unconstrained solution on some support.
inline Eigen::VectorXd nnls_enumerate(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const auto k = A.cols();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(k);
  double best_res = b.squaredNorm();
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < k; ++j)
      if (mask >> j & 1u) idx.push_back(j);
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
    const Eigen::VectorXd x = sub.completeOrthogonalDecomposition().solve(b);
    if ((x.array() < 0).any()) continue;
    const double res = (sub * x - b).squaredNorm();
    if (res < best_res - 1e-15) {
      best_res = res;
      best.setZero();
      for (std::size_t c = 0; c < idx.size(); ++c) best[idx[c]] = x[static_cast<Eigen::Index>(c)];
    }
  }
  return best;
}

/// Uniform non-negative matrix from a standard engine.
inline Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = 0,
                               double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = d(rng);
  return m;
}

/// Block memberships: row i belongs to role i % r with weight in [1, 2].
inline Eigen::MatrixXd block_memberships(Eigen::Index n, Eigen::Index r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(1.0, 2.0);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, r);
  for (Eigen::Index i = 0; i < n; ++i) g(i, i % r) = d(rng);
  return g;
}

/// Well-separated role rows: each role owns a disjoint group of columns at
/// high weight, with low background elsewhere.
inline Eigen::MatrixXd separated_basis(Eigen::Index r, Eigen::Index f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> bg(0.0, 0.1), hi(0.8, 1.0);
  Eigen::MatrixXd F(r, f);
  for (Eigen::Index k = 0; k < r; ++k)
    for (Eigen::Index j = 0; j < f; ++j) F(k, j) = (j % r == k) ? hi(rng) : bg(rng);
  return F;
}

}  // namespace oracle
