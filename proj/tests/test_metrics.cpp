#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dagar/formats.hpp"
#include "dagar/metrics.hpp"
#include "dagar/simulate.hpp"

using namespace dagar;
using Catch::Matchers::WithinAbs;

TEST_CASE("average neighbour-pair correlation") {
  SECTION("two-vertex DAGAR gives exactly rho") {
    Graph g = from_edge_list(2, {{0, 1}});
    for (double rho : {0.1, 0.5, 0.9}) {
      const CholeskyPrecision cp = dagar_factors(g, identity_ordering(g), rho);
      CHECK_THAT(avg_neighbor_correlation(cp, g), WithinAbs(rho, 1e-12));
    }
  }

  SECTION("path DAGAR gives exactly rho") {
    auto [g, emb] = path_graph(60);
    const Ordering ord = identity_ordering(g);
    for (double rho : {0.2, 0.7}) {
      const CholeskyPrecision cp = dagar_factors(g, ord, rho);
      CHECK_THAT(avg_neighbor_correlation(cp, g), WithinAbs(rho, 1e-10));
    }
  }

  SECTION("singular input is rejected") {
    auto [g, emb] = path_graph(4);
    const SparseSymmetric icar = car_precision(g, 1.0, CarVariant::improper);
    CHECK_THROWS_AS(avg_neighbor_correlation(icar, g), numerical_error);
  }
}

TEST_CASE("mse") {
  Eigen::VectorXd a(3), b(3);
  a << 1, 2, 3;
  CHECK(mse(a, a) == 0.0);
  b = a.array() + 1.0;
  CHECK_THAT(mse(a, b), WithinAbs(1.0, 1e-15));
  Eigen::VectorXd c(2), d(2);
  c << 0, 0;
  d << 1, 3;
  CHECK_THAT(mse(c, d), WithinAbs(5.0, 1e-15));
  CHECK_THROWS_AS(mse(a, c), validation_error);
}

TEST_CASE("frobenius ratio and closed-form limits") {
  auto [g, emb] = path_graph(40);
  const Ordering ord = identity_ordering(g);
  const SparseSymmetric q = assemble_precision(dagar_factors(g, ord, 0.5));
  CHECK(frobenius_ratio(q, q) == 0.0);

  const SparseSymmetric q0 = assemble_precision(dagar_factors(g, ord, 0.0));
  const SparseSymmetric qof0 = orderfree_precision(g, 0.0);
  CHECK_THAT(frobenius_ratio(q0, qof0), WithinAbs(0.0, 1e-14));

  SECTION("closed forms at the endpoints") {
    CHECK(rhs_path(0.0) == 0.0);
    CHECK(rhs_grid(0.0) == 0.0);
    CHECK_THAT(rhs_path(1.0), WithinAbs(std::sqrt(3.0 / 87.0), 1e-15));
    CHECK_THAT(rhs_path(1.0), WithinAbs(0.186, 5e-4));
    CHECK_THAT(rhs_grid(1.0), WithinAbs(0.17, 5e-3));
    CHECK_THAT(rhs_path(0.25), WithinAbs(0.02, 5e-3));
  }

  SECTION("limit curves rise toward rho = 1") {
    // rhs_path is strictly non-decreasing. rhs_grid peaks at rho ~ 0.985
    // and gives back ~2.3e-5 by rho = 1 (exact property of the closed
    // form, invisible at plotting resolution), so it gets that much slack.
    double prev_p = -1.0, prev_g = -1.0;
    for (int i = 0; i <= 100; ++i) {
      const double rho = i / 100.0;
      REQUIRE(rhs_path(rho) >= prev_p - 1e-12);
      REQUIRE(rhs_grid(rho) >= prev_g - 5e-5);
      prev_p = rhs_path(rho);
      prev_g = std::max(prev_g, rhs_grid(rho));
    }
    CHECK_THAT(rhs_grid(0.985), WithinAbs(0.16806815, 1e-6));  // the true maximum
  }

  SECTION("gap to the limit halves as k doubles") {
    double prev_gap = -1.0;
    for (int k : {250, 500, 1000}) {
      auto [pg, pemb] = path_graph(k);
      const Ordering o = identity_ordering(pg);
      const double ratio =
          frobenius_ratio(assemble_precision(dagar_factors(pg, o, 0.75)),
                          orderfree_precision(pg, 0.75));
      const double gap = std::abs(ratio - rhs_path(0.75));
      if (prev_gap > 0) CHECK(gap < 0.7 * prev_gap);
      prev_gap = gap;
    }
  }
}

TEST_CASE("dic from the likelihood trace") {
  SECTION("degenerate chain at the plug-in") {
    ChainOutput chain;
    chain.loglik = {-10.0, -10.0, -10.0};
    chain.plugin_loglik = -10.0;
    CHECK_THAT(dic(chain), WithinAbs(20.0, 1e-12));  // pD = 0, DIC = D(truth)
  }

  SECTION("two-draw chain by hand") {
    ChainOutput chain;
    chain.loglik = {-4.0, -6.0};
    chain.plugin_loglik = -4.5;
    // Dbar = 10, Dhat = 9, pD = 1, DIC = 11
    CHECK_THAT(dic(chain), WithinAbs(11.0, 1e-12));
  }

  SECTION("missing trace") {
    ChainOutput chain;
    CHECK_THROWS_AS(dic(chain), validation_error);
  }
}

TEST_CASE("leave-one-out lppd returns a finite value") {
  auto [g, emb] = path_graph(6);
  ModelSpec spec;
  spec.kind = ModelKind::dagar;
  spec.graph = g;
  spec.ordering = identity_ordering(g);
  spec.link = Link::identity;
  spec.X = Eigen::MatrixXd::Ones(6, 1);
  Priors priors;
  MCMCConfig cfg;
  cfg.iterations = 800;
  cfg.burn_in = 400;
  cfg.seed = 31;
  Eigen::VectorXd y(6);
  y << 0.3, -0.2, 0.5, 0.1, -0.4, 0.2;
  const double lppd = loo_lppd(y, spec, priors, cfg, {50});
  CHECK(std::isfinite(lppd));
  CHECK(lppd < 0.0);
}

TEST_CASE("loo prefers the generating model more often than not", "[slowish]") {
  // Poisson data generated from a DAGAR field on a 20-region path; compare
  // DAGAR and proper-CAR cross-validated predictive densities across seeds.
  auto [g, emb] = path_graph(20);
  const Ordering ord = identity_ordering(g);
  const int n_seeds = 20;
  int dagar_wins = 0;
  for (int seed = 0; seed < n_seeds; ++seed) {
    Rng rng(900 + seed);
    const CholeskyPrecision cp = dagar_factors(g, ord, 0.8);
    const Eigen::VectorXd w = sample_mvn_precision(cp, 2.0, rng);
    Eigen::VectorXd expected = Eigen::VectorXd::Constant(20, 40.0);
    Eigen::VectorXd counts(20);
    for (int i = 0; i < 20; ++i) {
      const double mu = expected[i] * std::exp(0.1 + w[i]);
      // inverse-cdf Poisson draw
      double u = rng.uniform();
      double p = std::exp(-mu), cum = p;
      int x = 0;
      while (u > cum && x < 100000) {
        ++x;
        p *= mu / x;
        cum += p;
      }
      counts[i] = x;
    }
    ModelSpec base;
    base.graph = g;
    base.ordering = ord;
    base.link = Link::log;
    base.X = Eigen::MatrixXd::Ones(20, 1);
    base.offsets = expected;
    Priors priors;
    MCMCConfig cfg;
    cfg.iterations = 1500;
    cfg.burn_in = 750;
    cfg.seed = 7000 + seed;
    ModelSpec dagar_spec = base;
    dagar_spec.kind = ModelKind::dagar;
    ModelSpec car_spec = base;
    car_spec.kind = ModelKind::car_proper;
    const double l_dagar = loo_lppd(counts, dagar_spec, priors, cfg, {60});
    const double l_car = loo_lppd(counts, car_spec, priors, cfg, {60});
    if (l_dagar >= l_car) ++dagar_wins;
  }
  INFO("dagar wins " << dagar_wins << " of " << n_seeds);
  CHECK(dagar_wins >= static_cast<int>(0.6 * n_seeds));
}
