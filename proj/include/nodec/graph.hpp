#pragma once

#include <cstddef>
#include <cstdint>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "nodec/error.hpp"
#include "nodec/matrix.hpp"
#include "nodec/rng.hpp"

namespace nodec {

// Undirected, unweighted graph. Edges are stored with i < j; the dense 0/1
// adjacency mirrors them (zero diagonal).
struct Graph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  Matrix adjacency;
};

inline Graph graph_from_edges(std::size_t n,
                              std::vector<std::pair<std::size_t, std::size_t>> edges) {
  Graph g;
  g.n = n;
  g.adjacency = Matrix(n, n);
  for (auto& [i, j] : edges) {
    if (i == j) throw ParamError("self loops are not allowed");
    if (i >= n || j >= n) throw ParamError("edge endpoint out of range");
    if (i > j) std::swap(i, j);
    g.adjacency(i, j) = 1.0;
    g.adjacency(j, i) = 1.0;
  }
  // rebuild in canonical order, dropping duplicates
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (g.adjacency(i, j) != 0.0) g.edges.emplace_back(i, j);
  return g;
}

inline bool is_connected(const Graph& g) {
  if (g.n == 0) return false;
  std::vector<std::vector<std::size_t>> nbr(g.n);
  for (const auto& [i, j] : g.edges) {
    nbr[i].push_back(j);
    nbr[j].push_back(i);
  }
  std::vector<bool> seen(g.n, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const std::size_t v = q.front();
    q.pop();
    for (std::size_t w : nbr[v])
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        q.push(w);
      }
  }
  return count == g.n;
}

inline Graph complete(std::size_t n) {
  if (n < 2) throw ParamError("complete graph needs n >= 2");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return graph_from_edges(n, std::move(edges));
}

// G(n, p); resampled with a derived seed until connected.
inline Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  if (n < 2) throw ParamError("erdos_renyi needs n >= 2");
  if (!(p >= 0.0 && p <= 1.0)) throw ParamError("edge probability must be in [0,1]");
  for (std::uint64_t attempt = 0; attempt < 10000; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.bernoulli(p)) edges.emplace_back(i, j);
    Graph g = graph_from_edges(n, std::move(edges));
    if (is_connected(g)) return g;
  }
  throw ConnectivityError("erdos_renyi could not produce a connected graph");
}

// rows x cols grid, 4-neighborhood, non-periodic
inline Graph square_lattice(std::size_t rows, std::size_t cols) {
  if (rows * cols < 2) throw ParamError("square_lattice needs at least 2 nodes");
  auto id = [cols](std::size_t r, std::size_t c) { return r * cols + c; };
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) edges.emplace_back(id(r, c), id(r + 1, c));
    }
  return graph_from_edges(rows * cols, std::move(edges));
}

// Ring lattice with floor(k/2) neighbors per side, then each original edge
// rewired with probability p (avoiding self loops and duplicates);
// resampled with a derived seed until connected.
inline Graph watts_strogatz(std::size_t n, std::size_t k, double p, std::uint64_t seed) {
  if (n < 2) throw ParamError("watts_strogatz needs n >= 2");
  if (k >= n) throw ParamError("watts_strogatz needs k < n");
  const std::size_t half = k / 2;
  if (half < 1) throw ParamError("watts_strogatz needs k >= 2");
  if (!(p >= 0.0 && p <= 1.0)) throw ParamError("rewiring probability must be in [0,1]");

  for (std::uint64_t attempt = 0; attempt < 10000; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    std::set<std::pair<std::size_t, std::size_t>> edge_set;
    auto canon = [](std::size_t a, std::size_t b) {
      return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 1; d <= half; ++d) edge_set.insert(canon(i, (i + d) % n));

    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 1; d <= half; ++d) {
        const auto old_edge = canon(i, (i + d) % n);
        if (!edge_set.count(old_edge) || !rng.bernoulli(p)) continue;
        // pick a fresh endpoint for i
        std::size_t target = i;
        bool found = false;
        for (int tries = 0; tries < 64; ++tries) {
          target = rng.uniform_int(n);
          if (target != i && !edge_set.count(canon(i, target))) {
            found = true;
            break;
          }
        }
        if (!found) continue;  // node saturated, keep the original edge
        edge_set.erase(old_edge);
        edge_set.insert(canon(i, target));
      }

    Graph g = graph_from_edges(n, {edge_set.begin(), edge_set.end()});
    if (is_connected(g)) return g;
  }
  throw ConnectivityError("watts_strogatz could not produce a connected graph");
}

// L = D - A
inline Matrix laplacian(const Graph& g) {
  Matrix lap(g.n, g.n);
  for (const auto& [i, j] : g.edges) {
    lap(i, j) -= 1.0;
    lap(j, i) -= 1.0;
    lap(i, i) += 1.0;
    lap(j, j) += 1.0;
  }
  return lap;
}

}  // namespace nodec
