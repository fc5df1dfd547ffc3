#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dagar/errors.hpp"
#include "dagar/rng.hpp"

namespace dagar {

// Undirected neighbourhood graph over k areal units. Vertices are 0-based
// internally; file formats and error messages use 1-based labels.
// Immutable after construction.
class Graph {
 public:
  Graph() = default;

  // Takes adjacency lists; validates symmetry, sortedness, no loops/dups.
  explicit Graph(std::vector<std::vector<int>> adjacency) : adj_(std::move(adjacency)) {
    const int k = static_cast<int>(adj_.size());
    long long degree_sum = 0;
    for (int i = 0; i < k; ++i) {
      auto& nbrs = adj_[i];
      std::sort(nbrs.begin(), nbrs.end());
      for (std::size_t t = 0; t < nbrs.size(); ++t) {
        const int j = nbrs[t];
        if (j < 0 || j >= k)
          throw validation_error("adjacency of vertex " + std::to_string(i + 1) +
                                 " references out-of-range vertex " + std::to_string(j + 1));
        if (j == i)
          throw validation_error("self-loop at vertex " + std::to_string(i + 1));
        if (t > 0 && nbrs[t - 1] == j)
          throw validation_error("duplicate edge " + std::to_string(i + 1) + "-" +
                                 std::to_string(j + 1));
      }
      degree_sum += static_cast<long long>(nbrs.size());
    }
    for (int i = 0; i < k; ++i)
      for (int j : adj_[i])
        if (!std::binary_search(adj_[j].begin(), adj_[j].end(), i))
          throw validation_error("asymmetric adjacency: " + std::to_string(i + 1) + "-" +
                                 std::to_string(j + 1));
    e_ = degree_sum / 2;
  }

  int k() const { return static_cast<int>(adj_.size()); }
  long long e() const { return e_; }
  int degree(int i) const { return static_cast<int>(adj_[i].size()); }
  const std::vector<int>& neighbors(int i) const { return adj_[i]; }
  const std::vector<std::vector<int>>& adjacency() const { return adj_; }

  bool has_edge(int i, int j) const {
    return std::binary_search(adj_[i].begin(), adj_[i].end(), j);
  }

  int max_degree() const {
    int m = 0;
    for (const auto& nbrs : adj_) m = std::max(m, static_cast<int>(nbrs.size()));
    return m;
  }

 private:
  std::vector<std::vector<int>> adj_;
  long long e_ = 0;
};

// Planar (or 1-D) embedding of the vertices; one coordinate pair each.
struct Embedding {
  std::vector<std::array<double, 2>> coords;

  int k() const { return static_cast<int>(coords.size()); }

  void validate(int expected_k) const {
    if (k() != expected_k)
      throw validation_error("embedding has " + std::to_string(k()) + " coordinates, graph has " +
                             std::to_string(expected_k) + " vertices");
    for (const auto& c : coords)
      if (!std::isfinite(c[0]) || !std::isfinite(c[1]))
        throw validation_error("embedding contains non-finite coordinates");
  }
};

struct GraphBundle {
  Graph graph;
  Embedding embedding;
};

inline GraphBundle path_graph(int k) {
  if (k < 1) throw validation_error("path_graph: vertex count must be at least 1");
  std::vector<std::vector<int>> adj(k);
  for (int i = 0; i + 1 < k; ++i) {
    adj[i].push_back(i + 1);
    adj[i + 1].push_back(i);
  }
  Embedding emb;
  emb.coords.reserve(k);
  for (int i = 0; i < k; ++i) emb.coords.push_back({static_cast<double>(i + 1), 0.0});
  return {Graph(std::move(adj)), std::move(emb)};
}

// m x n lattice, vertices flattened row-major, edges between horizontal and
// vertical neighbours. Embedding coordinate of cell (i,j) is (i,j), 1-based.
inline GraphBundle grid_graph(int m, int n) {
  if (m < 1 || n < 1) throw validation_error("grid_graph: both dimensions must be at least 1");
  const int k = m * n;
  std::vector<std::vector<int>> adj(k);
  auto id = [n](int i, int j) { return i * n + j; };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      if (i + 1 < m) {
        adj[id(i, j)].push_back(id(i + 1, j));
        adj[id(i + 1, j)].push_back(id(i, j));
      }
      if (j + 1 < n) {
        adj[id(i, j)].push_back(id(i, j + 1));
        adj[id(i, j + 1)].push_back(id(i, j));
      }
    }
  Embedding emb;
  emb.coords.reserve(k);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      emb.coords.push_back({static_cast<double>(i + 1), static_cast<double>(j + 1)});
  return {Graph(std::move(adj)), std::move(emb)};
}

// Symmetric, deduplicated graph from a list of 0-based vertex pairs.
// Position indices in error messages are 1-based.
inline Graph from_edge_list(int k, const std::vector<std::pair<int, int>>& edges) {
  if (k < 1) throw validation_error("from_edge_list: vertex count must be at least 1");
  std::vector<std::vector<int>> adj(k);
  std::size_t pos = 0;
  for (const auto& [a, b] : edges) {
    ++pos;
    if (a < 0 || a >= k || b < 0 || b >= k)
      throw validation_error("edge " + std::to_string(pos) + ": vertex index out of range 1.." +
                             std::to_string(k));
    if (a == b)
      throw validation_error("edge " + std::to_string(pos) + ": self-loop at vertex " +
                             std::to_string(a + 1));
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return Graph(std::move(adj));
}

// Joins i and j when they are neighbours or share at least one common
// neighbour; the sparsity pattern of the order-free precision.
inline Graph second_order_graph(const Graph& g) {
  const int k = g.k();
  std::vector<std::vector<int>> adj(k);
  std::vector<char> mark(k, 0);
  for (int i = 0; i < k; ++i) {
    std::vector<int> reach;
    for (int j : g.neighbors(i)) {
      if (!mark[j] && j != i) { mark[j] = 1; reach.push_back(j); }
      for (int l : g.neighbors(j))
        if (!mark[l] && l != i) { mark[l] = 1; reach.push_back(l); }
    }
    for (int j : reach) mark[j] = 0;
    adj[i] = std::move(reach);
  }
  return Graph(std::move(adj));
}

inline std::vector<int> component_labels(const Graph& g, int* n_components = nullptr) {
  const int k = g.k();
  std::vector<int> label(k, -1);
  int comps = 0;
  for (int s = 0; s < k; ++s) {
    if (label[s] >= 0) continue;
    label[s] = comps;
    std::vector<int> stack{s};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : g.neighbors(v))
        if (label[w] < 0) { label[w] = comps; stack.push_back(w); }
    }
    ++comps;
  }
  if (n_components) *n_components = comps;
  return label;
}

inline bool is_connected(const Graph& g) {
  if (g.k() == 0) return true;
  int comps = 0;
  component_labels(g, &comps);
  return comps == 1;
}

// BFS from every vertex. Throws naming two unreachable vertices when the
// graph is disconnected.
inline Eigen::MatrixXi shortest_path_distances(const Graph& g) {
  const int k = g.k();
  Eigen::MatrixXi d = Eigen::MatrixXi::Constant(k, k, -1);
  std::vector<int> queue;
  queue.reserve(k);
  for (int s = 0; s < k; ++s) {
    d(s, s) = 0;
    queue.assign(1, s);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int v = queue[head];
      for (int w : g.neighbors(v))
        if (d(s, w) < 0) {
          d(s, w) = d(s, v) + 1;
          queue.push_back(w);
        }
    }
    for (int t = 0; t < k; ++t)
      if (d(s, t) < 0)
        throw structure_error("graph is disconnected: no path between vertices " +
                              std::to_string(s + 1) + " and " + std::to_string(t + 1));
  }
  return d;
}

// A vertex ordering pi together with the directed neighbour sets it induces:
// N_pi(i) = { j ~ i : j precedes i in pi }. Each undirected edge becomes
// exactly one directed edge.
struct Ordering {
  std::vector<int> pi;          // pi[t] = vertex at position t
  std::vector<int> pi_inverse;  // position of vertex i
  std::vector<std::vector<int>> directed_neighbors;  // per vertex, sorted
  std::vector<int> directed_counts;

  int k() const { return static_cast<int>(pi.size()); }
};

inline Ordering ordering_from_permutation(const Graph& g, std::vector<int> pi) {
  const int k = g.k();
  if (static_cast<int>(pi.size()) != k)
    throw validation_error("ordering length does not match vertex count");
  Ordering ord;
  ord.pi = std::move(pi);
  ord.pi_inverse.assign(k, -1);
  for (int t = 0; t < k; ++t) {
    const int v = ord.pi[t];
    if (v < 0 || v >= k || ord.pi_inverse[v] >= 0)
      throw validation_error("ordering is not a permutation of the vertices");
    ord.pi_inverse[v] = t;
  }
  ord.directed_neighbors.resize(k);
  ord.directed_counts.assign(k, 0);
  for (int i = 0; i < k; ++i) {
    auto& dn = ord.directed_neighbors[i];
    for (int j : g.neighbors(i))
      if (ord.pi_inverse[j] < ord.pi_inverse[i]) dn.push_back(j);
    ord.directed_counts[i] = static_cast<int>(dn.size());
  }
  return ord;
}

inline Ordering identity_ordering(const Graph& g) {
  std::vector<int> pi(g.k());
  std::iota(pi.begin(), pi.end(), 0);
  return ordering_from_permutation(g, std::move(pi));
}

inline Ordering reverse_ordering(const Graph& g) {
  std::vector<int> pi(g.k());
  std::iota(pi.rbegin(), pi.rend(), 0);
  return ordering_from_permutation(g, std::move(pi));
}

enum class CoordKey { sum, difference };
enum class CoordDir { increasing, decreasing };

// Sort vertices by x+y (or x-y) of their embedding, ties broken by
// ascending vertex index so runs are reproducible.
inline Ordering coordinate_sum_ordering(const Embedding& emb, const Graph& g,
                                        CoordKey key = CoordKey::sum,
                                        CoordDir dir = CoordDir::increasing) {
  emb.validate(g.k());
  std::vector<int> pi(g.k());
  std::iota(pi.begin(), pi.end(), 0);
  auto value = [&](int v) {
    const auto& c = emb.coords[v];
    return key == CoordKey::sum ? c[0] + c[1] : c[0] - c[1];
  };
  std::stable_sort(pi.begin(), pi.end(), [&](int a, int b) {
    const double va = value(a), vb = value(b);
    if (va != vb) return dir == CoordDir::increasing ? va < vb : va > vb;
    return a < b;
  });
  return ordering_from_permutation(g, std::move(pi));
}

// Breadth-first ordering of a tree; every non-root vertex ends up with its
// parent as sole directed neighbour.
inline Ordering tree_traversal_ordering(const Graph& g, int root) {
  const int k = g.k();
  if (root < 0 || root >= k) throw validation_error("tree ordering: root out of range");
  if (g.e() != k - 1 || !is_connected(g))
    throw structure_error("tree ordering requires a connected acyclic graph (e = k-1)");
  std::vector<int> pi;
  pi.reserve(k);
  std::vector<char> seen(k, 0);
  pi.push_back(root);
  seen[root] = 1;
  for (std::size_t head = 0; head < pi.size(); ++head)
    for (int w : g.neighbors(pi[head]))
      if (!seen[w]) {
        seen[w] = 1;
        pi.push_back(w);
      }
  return ordering_from_permutation(g, std::move(pi));
}

// Uniform random labelled tree via a random Prufer sequence.
inline Graph random_tree(int k, Rng& rng) {
  if (k < 1) throw validation_error("random_tree: vertex count must be at least 1");
  if (k == 1) return Graph(std::vector<std::vector<int>>(1));
  if (k == 2) return from_edge_list(2, {{0, 1}});
  std::vector<int> prufer(k - 2);
  for (auto& p : prufer) p = static_cast<int>(rng.uniform_below(k));
  std::vector<int> deg(k, 1);
  for (int p : prufer) ++deg[p];
  std::vector<std::pair<int, int>> edges;
  edges.reserve(k - 1);
  std::priority_queue<int, std::vector<int>, std::greater<int>> leaves;
  for (int v = 0; v < k; ++v)
    if (deg[v] == 1) leaves.push(v);
  for (int p : prufer) {
    const int leaf = leaves.top();
    leaves.pop();
    edges.emplace_back(leaf, p);
    if (--deg[p] == 1) leaves.push(p);
  }
  const int a = leaves.top();
  leaves.pop();
  const int b = leaves.top();
  edges.emplace_back(a, b);
  return from_edge_list(k, edges);
}

// Random spanning tree plus independent extra edges: connected by
// construction.
inline Graph random_connected_graph(int k, double extra_edge_prob, Rng& rng) {
  Graph tree = random_tree(k, rng);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < k; ++i)
    for (int j : tree.neighbors(i))
      if (j > i) edges.emplace_back(i, j);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (!tree.has_edge(i, j) && rng.uniform() < extra_edge_prob) edges.emplace_back(i, j);
  return from_edge_list(k, edges);
}

}  // namespace dagar
