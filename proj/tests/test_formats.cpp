#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "dagar/formats.hpp"
#include "dagar/precision.hpp"

using namespace dagar;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("dagar_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("edge list round trip") {
  TempDir tmp;
  Rng rng(1);
  for (int t = 0; t < 8; ++t) {
    const Graph g = random_connected_graph(10 + static_cast<int>(rng.uniform_below(20)), 0.2, rng);
    const std::string path = tmp.file("g.txt");
    write_edge_list(path, g);
    const Graph h = read_edge_list(path);
    REQUIRE(h.adjacency() == g.adjacency());
  }
}

TEST_CASE("edge list validation") {
  TempDir tmp;
  const std::string path = tmp.file("bad.txt");

  SECTION("self loop reports the line") {
    std::ofstream(path) << "3 2\n1 2\n# comment\n3 3\n";
    CHECK_THROWS_WITH(read_edge_list(path), Catch::Matchers::ContainsSubstring(":4"));
  }

  SECTION("out of range") {
    std::ofstream(path) << "3 1\n1 7\n";
    CHECK_THROWS_WITH(read_edge_list(path), Catch::Matchers::ContainsSubstring("out of 1..3"));
  }

  SECTION("count mismatch") {
    std::ofstream(path) << "3 5\n1 2\n2 3\n";
    CHECK_THROWS_AS(read_edge_list(path), validation_error);
  }
}

TEST_CASE("embedding round trip") {
  TempDir tmp;
  auto [g, emb] = grid_graph(4, 3);
  const std::string path = tmp.file("emb.txt");
  write_embedding(path, emb);
  const Embedding back = read_embedding(path, g.k());
  for (int i = 0; i < g.k(); ++i) {
    CHECK(back.coords[i][0] == emb.coords[i][0]);
    CHECK(back.coords[i][1] == emb.coords[i][1]);
  }
  std::ofstream(path) << "1 0.5 0.5\n";
  CHECK_THROWS_WITH(read_embedding(path, 2),
                    Catch::Matchers::ContainsSubstring("vertex 2"));
}

TEST_CASE("triplet round trip preserves every bit") {
  TempDir tmp;
  auto [g, emb] = grid_graph(5, 4);
  const SparseSymmetric q = orderfree_precision(g, 0.734512349);
  const std::string path = tmp.file("q.txt");
  write_triplets(path, q);
  const SparseSymmetric back = read_triplets(path);
  REQUIRE(back.dim() == q.dim());
  REQUIRE(back.nnz_stored() == q.nnz_stored());
  for (int i = 0; i < q.dim(); ++i)
    for (int j = i; j < q.dim(); ++j)
      REQUIRE(back.at(i, j) == q.at(i, j));  // 17 digits round-trip doubles
}

TEST_CASE("dataset csv parsing") {
  TempDir tmp;

  SECTION("gaussian schema") {
    const std::string path = tmp.file("g.csv");
    std::ofstream(path) << "region,y,x1\n2,1.5,0.2\n1,-0.5,0.7\n3,2.25,-1.0\n";
    const Dataset ds = read_dataset_csv(path, 3, Link::identity);
    CHECK(ds.response[0] == -0.5);
    CHECK(ds.response[1] == 1.5);
    CHECK(ds.X(2, 0) == -1.0);
    CHECK(ds.covariate_names == std::vector<std::string>{"x1"});
  }

  SECTION("poisson schema") {
    const std::string path = tmp.file("p.csv");
    std::ofstream(path) << "region,observed,expected,se\n1,12,10.5,3\n2,8,9.25,1\n";
    const Dataset ds = read_dataset_csv(path, 2, Link::log);
    CHECK(ds.response[0] == 12.0);
    CHECK(ds.expected[1] == 9.25);
    CHECK(ds.X(0, 0) == 3.0);
  }

  SECTION("log link demands the expected column") {
    const std::string path = tmp.file("m.csv");
    std::ofstream(path) << "region,y,x1\n1,1,0\n2,2,0\n";
    CHECK_THROWS_WITH(read_dataset_csv(path, 2, Link::log),
                      Catch::Matchers::ContainsSubstring("observed"));
  }

  SECTION("duplicate and missing regions") {
    const std::string path = tmp.file("d.csv");
    std::ofstream(path) << "region,y\n1,1\n1,2\n";
    CHECK_THROWS_WITH(read_dataset_csv(path, 2, Link::identity),
                      Catch::Matchers::ContainsSubstring("duplicate"));
    std::ofstream(path) << "region,y\n1,1\n";
    CHECK_THROWS_WITH(read_dataset_csv(path, 2, Link::identity),
                      Catch::Matchers::ContainsSubstring("region 2"));
  }
}

TEST_CASE("float formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789012345678, -2.5e300}) {
    CHECK(std::stod(fmt17(v)) == v);
  }
}

TEST_CASE("trace and field csv shapes") {
  TempDir tmp;
  ChainOutput chain;
  chain.scalar_names = {"a", "b"};
  chain.scalars.resize(3, 2);
  chain.scalars << 1, 2, 3, 4, 5, 6;
  chain.w.resize(3, 2);
  chain.w << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  write_trace_csv(tmp.file("t.csv"), chain);
  write_w_csv(tmp.file("w.csv"), chain);
  std::ifstream t(tmp.file("t.csv"));
  std::string line;
  std::getline(t, line);
  CHECK(line == "a,b");
  int rows = 0;
  while (std::getline(t, line)) ++rows;
  CHECK(rows == 3);
  std::ifstream wf(tmp.file("w.csv"));
  std::getline(wf, line);
  CHECK(line == "w_1,w_2");
}
