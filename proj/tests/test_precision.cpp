#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "dagar/formats.hpp"
#include "dagar/graph.hpp"
#include "dagar/linalg.hpp"
#include "dagar/precision.hpp"

using namespace dagar;
using Catch::Matchers::WithinAbs;

namespace {

// Dense (I-B)^T F (I-B) assembled straight from the factors, the oracle for
// the sparse assembly path.
Eigen::MatrixXd dense_from_factors(const CholeskyPrecision& cp) {
  const int k = cp.k();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(k);
    u[i] = 1.0;
    for (int j : cp.ordering.directed_neighbors[i]) u[j] -= cp.b[i];
    q += cp.tau[i] * u * u.transpose();
  }
  return q;
}

Ordering random_ordering(const Graph& g, Rng& rng) {
  std::vector<int> pi(g.k());
  std::iota(pi.begin(), pi.end(), 0);
  for (int i = g.k() - 1; i > 0; --i)
    std::swap(pi[i], pi[static_cast<int>(rng.uniform_below(i + 1))]);
  return ordering_from_permutation(g, pi);
}

}  // namespace

TEST_CASE("dagar factor values") {
  auto [g, emb] = path_graph(4);
  Ordering ord = identity_ordering(g);

  SECTION("independence limit rho = 0") {
    CholeskyPrecision cp = dagar_factors(g, ord, 0.0);
    for (int i = 0; i < 4; ++i) {
      CHECK(cp.tau[i] == 1.0);
      if (ord.directed_counts[i] > 0) CHECK(cp.b[i] == 0.0);
    }
    CHECK(assemble_precision(cp).to_dense().isApprox(Eigen::MatrixXd::Identity(4, 4)));
  }

  SECTION("single directed neighbour at rho = 0.5") {
    CholeskyPrecision cp = dagar_factors(g, ord, 0.5);
    CHECK_THAT(cp.b[1], WithinAbs(0.5, 1e-15));
    CHECK_THAT(cp.tau[1], WithinAbs(1.0 / 0.75, 1e-15));
    // no directed neighbours: unit conditional precision
    CHECK_THAT(cp.tau[0], WithinAbs(1.0, 1e-15));
  }

  SECTION("three directed neighbours at rho = 0.5") {
    Graph star = from_edge_list(4, {{0, 3}, {1, 3}, {2, 3}});
    Ordering sord = identity_ordering(star);
    CholeskyPrecision cp = dagar_factors(star, sord, 0.5);
    CHECK_THAT(cp.b[3], WithinAbs(1.0 / 3.0, 1e-15));
    CHECK_THAT(cp.tau[3], WithinAbs(2.0, 1e-15));
  }

  SECTION("rho domain") {
    CHECK_THROWS_AS(dagar_factors(g, ord, 1.0), validation_error);
    CHECK_THROWS_AS(dagar_factors(g, ord, -0.1), validation_error);
    CHECK_NOTHROW(dagar_factors(g, ord, 0.0));
  }

  SECTION("disconnected graphs need the explicit flag") {
    Graph disc = from_edge_list(4, {{0, 1}, {2, 3}});
    Ordering dord = identity_ordering(disc);
    CHECK_THROWS_AS(dagar_factors(disc, dord, 0.5), structure_error);
    CHECK_NOTHROW(dagar_factors(disc, dord, 0.5, true));
  }
}

TEST_CASE("assembled precision matches the dense factor product") {
  // path: the inverse has (1,3) entry rho^2
  auto [g3, e3] = path_graph(3);
  CholeskyPrecision cp3 = dagar_factors(g3, identity_ordering(g3), 0.5);
  Eigen::MatrixXd cov = dense_inverse(assemble_precision(cp3).to_dense());
  CHECK_THAT(cov(0, 2), WithinAbs(0.25, 1e-12));

  Rng rng(101);
  for (int t = 0; t < 12; ++t) {
    const int k = 3 + static_cast<int>(rng.uniform_below(28));
    Graph g = random_connected_graph(k, 0.3, rng);
    Ordering ord = random_ordering(g, rng);
    const double rho = rng.uniform() * 0.95;
    CholeskyPrecision cp = dagar_factors(g, ord, rho);
    const Eigen::MatrixXd sparse = assemble_precision(cp).to_dense();
    const Eigen::MatrixXd dense = dense_from_factors(cp);
    REQUIRE((sparse - dense).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fast log determinant") {
  auto [g, emb] = path_graph(3);
  Ordering ord = identity_ordering(g);
  CHECK(dagar_logdet(dagar_factors(g, ord, 0.0)) == 0.0);

  // two vertices have one directed neighbour, the root has none:
  // log det Q = 2 log(1/(1-rho^2)) = -2 log 0.75 at rho = 0.5
  CHECK_THAT(dagar_logdet(dagar_factors(g, ord, 0.5)),
             WithinAbs(-2.0 * std::log(0.75), 1e-14));

  Rng rng(202);
  for (int t = 0; t < 12; ++t) {
    const int k = 3 + static_cast<int>(rng.uniform_below(28));
    Graph rg = random_connected_graph(k, 0.3, rng);
    CholeskyPrecision cp = dagar_factors(rg, random_ordering(rg, rng), rng.uniform() * 0.9);
    const double dense = dense_logdet(assemble_precision(cp).to_dense());
    REQUIRE_THAT(dagar_logdet(cp), WithinAbs(dense, 1e-10));
  }
}

TEST_CASE("fast quadratic form") {
  auto [g, emb] = path_graph(5);
  Ordering ord = identity_ordering(g);
  CholeskyPrecision cp = dagar_factors(g, ord, 0.6);
  CHECK(quadratic_form(cp, Eigen::VectorXd::Zero(5)) == 0.0);

  CholeskyPrecision cp0 = dagar_factors(g, ord, 0.0);
  Eigen::VectorXd w = Eigen::VectorXd::Random(5);
  CHECK_THAT(quadratic_form(cp0, w), WithinAbs(w.squaredNorm(), 1e-12));

  Rng rng(303);
  for (int t = 0; t < 12; ++t) {
    const int k = 3 + static_cast<int>(rng.uniform_below(28));
    Graph rg = random_connected_graph(k, 0.3, rng);
    CholeskyPrecision rcp = dagar_factors(rg, random_ordering(rg, rng), rng.uniform() * 0.9);
    Eigen::VectorXd v(k);
    for (int i = 0; i < k; ++i) v[i] = rng.normal();
    const double dense = v.dot(assemble_precision(rcp).to_dense() * v);
    REQUIRE_THAT(quadratic_form(rcp, v), WithinAbs(dense, 1e-10 * std::max(1.0, std::abs(dense))));
  }

  CHECK_THROWS_AS(quadratic_form(cp, Eigen::VectorXd::Zero(4)), validation_error);
}

TEST_CASE("f_weight") {
  CHECK(f_weight(0.3, 1) == 1.0);
  CHECK(f_weight(0.9, 1) == 1.0);
  for (int n = 1; n <= 6; ++n)
    CHECK_THAT(f_weight(0.0, n), WithinAbs(n * (n + 1) / 2.0, 1e-14));
  CHECK_THAT(f_weight(0.5, 3), WithinAbs(4.6, 1e-14));
  CHECK_THROWS_AS(f_weight(0.5, 0), validation_error);
  CHECK_THROWS_AS(f_weight(1.0, 2), validation_error);
}

TEST_CASE("order-free precision closed form") {
  SECTION("independence limit is the identity") {
    Rng rng(404);
    Graph g = random_connected_graph(9, 0.3, rng);
    CHECK(orderfree_precision(g, 0.0).to_dense().isApprox(Eigen::MatrixXd::Identity(9, 9), 1e-14));
  }

  SECTION("path interior entries at rho = 0.5") {
    auto [g, emb] = path_graph(9);
    const SparseSymmetric q = orderfree_precision(g, 0.5);
    const double u = 0.25;
    const double diag = (3 + 6 * u + u * u) / (3 * (1 + u) * (1 - u));
    const double skip = u / (3 * (1 + u) * (1 - u));
    CHECK_THAT(q.at(4, 4), WithinAbs(diag, 1e-14));          // 1.62222...
    CHECK_THAT(q.at(4, 6), WithinAbs(skip, 1e-14));          // 0.08888...
    CHECK_THAT(q.at(4, 4), WithinAbs(1.6222222222222222, 1e-10));
    CHECK_THAT(q.at(4, 6), WithinAbs(0.08888888888888889, 1e-10));
    CHECK_THAT(q.at(4, 5), WithinAbs(-0.5 / 0.75, 1e-14));
  }

  SECTION("matches brute force on the triangle") {
    Graph tri = from_edge_list(3, {{0, 1}, {1, 2}, {0, 2}});
    const Eigen::MatrixXd closed = orderfree_precision(tri, 0.5).to_dense();
    const Eigen::MatrixXd brute = bruteforce_orderfree(tri, 0.5);
    CHECK((closed - brute).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("matches brute force on random small graphs") {
    Rng rng(505);
    for (int t = 0; t < 10; ++t) {
      const int k = 3 + static_cast<int>(rng.uniform_below(5));  // 3..7
      Graph g = random_connected_graph(k, 0.4, rng);
      const double rho = rng.uniform() * 0.95;
      const Eigen::MatrixXd closed = orderfree_precision(g, rho).to_dense();
      const Eigen::MatrixXd brute = bruteforce_orderfree(g, rho);
      REQUIRE((closed - brute).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SECTION("pattern lies inside the second-order graph") {
    Rng rng(606);
    Graph g = random_connected_graph(12, 0.25, rng);
    const SparseSymmetric q = orderfree_precision(g, 0.7);
    const Graph g2 = second_order_graph(g);
    for (int i = 0; i < g.k(); ++i) {
      const auto row = q.upper_row(i);
      const double* v = row.val_begin;
      for (const int* j = row.col_begin; j != row.col_end; ++j, ++v)
        if (*j != i) REQUIRE(g2.has_edge(i, *j));
    }
  }
}

TEST_CASE("brute-force permutation average") {
  SECTION("single vertex") {
    Graph g1(std::vector<std::vector<int>>(1));
    const Eigen::MatrixXd q = bruteforce_orderfree(g1, 0.5);
    // no directed neighbours ever: tau = 1, matching the closed form Q = [1]
    CHECK_THAT(q(0, 0), WithinAbs(1.0, 1e-15));
    CHECK_THAT(orderfree_precision(g1, 0.5).at(0, 0), WithinAbs(1.0, 1e-15));
  }

  SECTION("two vertices: both orderings agree") {
    Graph g2 = from_edge_list(2, {{0, 1}});
    const Eigen::MatrixXd avg = bruteforce_orderfree(g2, 0.5);
    const Eigen::MatrixXd single =
        assemble_precision(dagar_factors(g2, identity_ordering(g2), 0.5)).to_dense();
    CHECK((avg - single).cwiseAbs().maxCoeff() < 1e-15);
  }

  SECTION("size guard") {
    Graph big = path_graph(9).graph;
    CHECK_THROWS_AS(bruteforce_orderfree(big, 0.5), validation_error);
  }

  SECTION("relabelling conjugates the average") {
    Rng rng(707);
    Graph g = random_connected_graph(5, 0.4, rng);
    // relabel i -> (i + 2) mod 5
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < 5; ++i)
      for (int j : g.neighbors(i))
        if (j > i) edges.emplace_back((i + 2) % 5, (j + 2) % 5);
    Graph h = from_edge_list(5, edges);
    const Eigen::MatrixXd qg = bruteforce_orderfree(g, 0.6);
    const Eigen::MatrixXd qh = bruteforce_orderfree(h, 0.6);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        REQUIRE_THAT(qh((i + 2) % 5, (j + 2) % 5), WithinAbs(qg(i, j), 1e-12));
  }

  SECTION("thread partitioning is reproducible") {
    Rng rng(808);
    Graph g = random_connected_graph(6, 0.4, rng);
    const Eigen::MatrixXd q1 = bruteforce_orderfree(g, 0.7, 1);
    const Eigen::MatrixXd q1b = bruteforce_orderfree(g, 0.7, 1);
    const Eigen::MatrixXd q3 = bruteforce_orderfree(g, 0.7, 3);
    CHECK((q1 - q1b).cwiseAbs().maxCoeff() == 0.0);  // bitwise for a fixed count
    CHECK((q1 - q3).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("CAR precision") {
  auto [g, emb] = path_graph(3);
  SECTION("rho = 0 is the degree matrix") {
    const Eigen::MatrixXd q = car_precision(g, 0.0, CarVariant::proper).to_dense();
    CHECK(q.isApprox(Eigen::Vector3d(1, 2, 1).asDiagonal().toDenseMatrix()));
  }

  SECTION("improper variant is D - A with zero row sums") {
    const Eigen::MatrixXd q = car_precision(g, 1.0, CarVariant::improper).to_dense();
    Eigen::MatrixXd expect(3, 3);
    expect << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    CHECK(q.isApprox(expect));
    CHECK(q.rowwise().sum().cwiseAbs().maxCoeff() < 1e-15);
  }

  SECTION("proper CAR is positive definite on the US graph at rho = 0.9") {
    const Graph us = load_us48().graph;
    const Eigen::MatrixXd q = car_precision(us, 0.9, CarVariant::proper).to_dense();
    Eigen::LLT<Eigen::MatrixXd> llt(q);
    CHECK(llt.info() == Eigen::Success);
  }

  SECTION("parameter validation") {
    CHECK_THROWS_AS(car_precision(g, 1.0, CarVariant::proper), validation_error);
    CHECK_THROWS_AS(car_precision(g, -0.2, CarVariant::proper), validation_error);
  }
}

TEST_CASE("positive definiteness across rho") {
  Rng rng(909);
  std::vector<Graph> graphs;
  graphs.push_back(path_graph(40).graph);
  graphs.push_back(grid_graph(10, 10).graph);
  graphs.push_back(random_connected_graph(30, 0.15, rng));
  for (const auto& g : graphs) {
    Ordering ord = identity_ordering(g);
    for (double rho : {0.05, 0.5, 0.95, 0.999}) {
      const Eigen::MatrixXd qd = assemble_precision(dagar_factors(g, ord, rho)).to_dense();
      const Eigen::MatrixXd qof = orderfree_precision(g, rho).to_dense();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(qd), es2(qof);
      REQUIRE(es1.eigenvalues().minCoeff() > 0.0);
      REQUIRE(es2.eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("both models approach the identity as rho -> 0") {
  Rng rng(111);
  Graph g = random_connected_graph(12, 0.3, rng);
  Ordering ord = identity_ordering(g);
  for (double rho : {1e-3, 1e-5}) {
    const Eigen::MatrixXd qd = assemble_precision(dagar_factors(g, ord, rho)).to_dense();
    const Eigen::MatrixXd qof = orderfree_precision(g, rho).to_dense();
    const double scale = 10 * rho;
    CHECK((qd - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < scale);
    CHECK((qof - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < scale);
  }
}

TEST_CASE("DAGAR coefficient matrix has one entry per edge") {
  Rng rng(222);
  Graph g = random_connected_graph(20, 0.2, rng);
  Ordering ord = random_ordering(g, rng);
  const long long nonzeros =
      std::accumulate(ord.directed_counts.begin(), ord.directed_counts.end(), 0LL);
  CHECK(nonzeros == g.e());
}
