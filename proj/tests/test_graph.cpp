#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "dagar/formats.hpp"
#include "dagar/graph.hpp"

using namespace dagar;

TEST_CASE("path graph construction") {
  auto [g, emb] = path_graph(3);
  CHECK(g.k() == 3);
  CHECK(g.e() == 2);
  CHECK(g.neighbors(0) == std::vector<int>{1});
  CHECK(g.neighbors(1) == std::vector<int>{0, 2});
  CHECK(g.neighbors(2) == std::vector<int>{1});
  CHECK(emb.coords[1][0] == 2.0);

  auto single = path_graph(1);
  CHECK(single.graph.k() == 1);
  CHECK(single.graph.e() == 0);
  CHECK(single.graph.neighbors(0).empty());

  auto long_path = path_graph(100).graph;
  int deg1 = 0, deg2 = 0;
  for (int i = 0; i < 100; ++i) {
    if (long_path.degree(i) == 1) ++deg1;
    if (long_path.degree(i) == 2) ++deg2;
  }
  CHECK(deg1 == 2);
  CHECK(deg2 == 98);

  CHECK_THROWS_AS(path_graph(0), validation_error);
}

TEST_CASE("grid graph construction") {
  auto [g, emb] = grid_graph(2, 2);
  CHECK(g.e() == 4);
  for (int i = 0; i < 4; ++i) CHECK(g.degree(i) == 2);

  auto big = grid_graph(10, 10).graph;
  CHECK(big.k() == 100);
  CHECK(big.e() == 180);

  auto flat = grid_graph(1, 5).graph;
  auto path5 = path_graph(5).graph;
  CHECK(flat.adjacency() == path5.adjacency());

  CHECK_THROWS_AS(grid_graph(0, 5), validation_error);
  CHECK_THROWS_AS(grid_graph(3, 0), validation_error);
}

TEST_CASE("from_edge_list symmetrises and deduplicates") {
  Graph g = from_edge_list(2, {{0, 1}, {1, 0}});
  CHECK(g.e() == 1);

  Graph disconnected = from_edge_list(3, {{0, 2}});
  CHECK_FALSE(is_connected(disconnected));

  CHECK_THROWS_WITH(from_edge_list(3, {{0, 1}, {1, 3}}),
                    Catch::Matchers::ContainsSubstring("edge 2"));
  CHECK_THROWS_WITH(from_edge_list(3, {{1, 1}}),
                    Catch::Matchers::ContainsSubstring("self-loop"));
}

TEST_CASE("US adjacency asset") {
  UsGraph us = load_us48();
  CHECK(us.graph.k() == 48);
  CHECK(us.graph.e() == 105);
  CHECK(is_connected(us.graph));
  CHECK(us.codes[0] == "AL");
  CHECK(us.codes[47] == "WY");
  us.embedding.validate(48);
  // Missouri and Tennessee border eight states each
  const auto index_of = [&](const std::string& code) {
    return static_cast<int>(std::find(us.codes.begin(), us.codes.end(), code) -
                            us.codes.begin());
  };
  CHECK(us.graph.degree(index_of("MO")) == 8);
  CHECK(us.graph.degree(index_of("TN")) == 8);
  CHECK(us.graph.degree(index_of("ME")) == 1);
}

TEST_CASE("second order graph") {
  auto path4 = path_graph(4).graph;
  Graph g2 = second_order_graph(path4);
  CHECK(g2.e() == 5);
  CHECK(g2.has_edge(0, 2));
  CHECK(g2.has_edge(1, 3));
  CHECK_FALSE(g2.has_edge(0, 3));

  Graph k3 = from_edge_list(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(second_order_graph(k3).adjacency() == k3.adjacency());

  Graph star = from_edge_list(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  CHECK(second_order_graph(star).e() == 10);

  // contains the original edges (random graphs)
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    Graph g = random_connected_graph(12, 0.2, rng);
    Graph s = second_order_graph(g);
    for (int i = 0; i < g.k(); ++i)
      for (int j : g.neighbors(i)) REQUIRE(s.has_edge(i, j));
  }
}

TEST_CASE("coordinate-sum ordering") {
  auto [g, emb] = grid_graph(2, 2);
  Ordering ord = coordinate_sum_ordering(emb, g);
  CHECK(ord.pi.front() == 0);
  CHECK(ord.pi.back() == 3);
  std::vector<int> counts = ord.directed_counts;
  std::sort(counts.begin(), counts.end());
  CHECK(counts == std::vector<int>{0, 1, 1, 2});

  auto [pg, pemb] = path_graph(6);
  Ordering left = coordinate_sum_ordering(pemb, pg);
  for (int t = 0; t < 6; ++t) CHECK(left.pi[t] == t);

  // every undirected edge becomes exactly one directed edge
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    Graph rg = random_connected_graph(15, 0.25, rng);
    std::vector<int> pi(15);
    std::iota(pi.begin(), pi.end(), 0);
    for (int i = 14; i > 0; --i) std::swap(pi[i], pi[rng.uniform_below(i + 1)]);
    Ordering o = ordering_from_permutation(rg, pi);
    long long total = 0;
    std::set<std::pair<int, int>> seen;
    for (int i = 0; i < 15; ++i)
      for (int j : o.directed_neighbors[i]) {
        seen.insert({std::min(i, j), std::max(i, j)});
        ++total;
      }
    CHECK(total == rg.e());
    CHECK(static_cast<long long>(seen.size()) == rg.e());
  }
}

TEST_CASE("tree traversal ordering") {
  auto path5 = path_graph(5).graph;
  Ordering ord = tree_traversal_ordering(path5, 0);
  for (int t = 0; t < 5; ++t) CHECK(ord.pi[t] == t);
  for (int i = 1; i < 5; ++i) {
    CHECK(ord.directed_counts[i] == 1);
    CHECK(ord.directed_neighbors[i] == std::vector<int>{i - 1});
  }

  Graph star = from_edge_list(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  Ordering sord = tree_traversal_ordering(star, 0);
  for (int i = 1; i < 5; ++i) CHECK(sord.directed_neighbors[i] == std::vector<int>{0});

  Rng rng(5);
  Graph t20 = random_tree(20, rng);
  Ordering tord = tree_traversal_ordering(t20, 7);
  for (int i = 0; i < 20; ++i)
    CHECK(tord.directed_counts[i] == (i == 7 ? 0 : 1));

  Graph cycle = from_edge_list(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK_THROWS_AS(tree_traversal_ordering(cycle, 0), structure_error);
}

TEST_CASE("shortest path distances") {
  auto path4 = path_graph(4).graph;
  Eigen::MatrixXi d = shortest_path_distances(path4);
  CHECK(d(0, 3) == 3);

  auto g33 = grid_graph(3, 3).graph;
  CHECK(shortest_path_distances(g33)(0, 8) == 4);

  Graph tri = from_edge_list(3, {{0, 1}, {1, 2}, {0, 2}});
  Eigen::MatrixXi dt = shortest_path_distances(tri);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(dt(i, j) == (i == j ? 0 : 1));

  Graph disc = from_edge_list(4, {{0, 1}, {2, 3}});
  CHECK_THROWS_AS(shortest_path_distances(disc), structure_error);

  // triangle inequality and d=1 iff adjacency on a random connected graph
  Rng rng(17);
  Graph g = random_connected_graph(14, 0.25, rng);
  Eigen::MatrixXi dd = shortest_path_distances(g);
  for (int i = 0; i < 14; ++i)
    for (int j = 0; j < 14; ++j) {
      CHECK((dd(i, j) == 1) == g.has_edge(i, j));
      for (int l = 0; l < 14; ++l) REQUIRE(dd(i, j) <= dd(i, l) + dd(l, j));
    }
}

TEST_CASE("connectivity") {
  CHECK(is_connected(path_graph(3).graph));
  Graph two = from_edge_list(2, {});
  CHECK_FALSE(is_connected(two));
  CHECK(is_connected(load_us48().graph));
}

TEST_CASE("graph constructor validation") {
  using Adj = std::vector<std::vector<int>>;
  CHECK_THROWS_AS(Graph(Adj{{1}, {0}, {0}}), validation_error);   // asymmetric
  CHECK_THROWS_AS(Graph(Adj{{0}}), validation_error);             // self loop
  CHECK_THROWS_AS(Graph(Adj{{1, 1}, {0, 0}}), validation_error);  // duplicates
}
