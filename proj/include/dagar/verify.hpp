#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dagar/formats.hpp"
#include "dagar/graph.hpp"
#include "dagar/linalg.hpp"
#include "dagar/metrics.hpp"
#include "dagar/precision.hpp"
#include "dagar/rng.hpp"

// Oracle suites checking the library's closed forms against independent
// routes: tree/grid covariance identities, the brute-force permutation
// average, the Frobenius-limit formulas, and the permuted LDL^T realisation.
// Shared by the `verify` CLI command and the acceptance tests.
namespace dagar::verify {

struct Check {
  std::string name;
  bool pass = false;
  double observed = 0.0;  // worst deviation (or the measured value)
  double bound = 0.0;
  std::string note;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline Check bounded(std::string name, double worst, double bound, std::string note = "") {
  return {std::move(name), worst < bound, worst, bound, std::move(note)};
}

}  // namespace detail

// Trees: the DAGAR precision under a breadth-first ordering inverts to the
// AR(1) covariance rho^{d_ij} on the tree.
inline SuiteReport tree_suite(int n_trees = 50, int max_k = 50,
                              std::vector<double> rhos = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
                                                          0.8, 0.9},
                              std::uint64_t seed = 20240809) {
  detail::Stopwatch timer;
  SuiteReport report;
  report.suite = "tree";
  Rng rng(seed);
  double worst = 0.0;
  bool parents_ok = true;
  for (int t = 0; t < n_trees; ++t) {
    const int k = 2 + static_cast<int>(rng.uniform_below(max_k - 1));
    const Graph g = random_tree(k, rng);
    const int root = static_cast<int>(rng.uniform_below(k));
    const Ordering ord = tree_traversal_ordering(g, root);
    for (int i = 0; i < k; ++i)
      if (i != root && ord.directed_counts[i] != 1) parents_ok = false;
    const Eigen::MatrixXi d = shortest_path_distances(g);
    for (double rho : rhos) {
      const Eigen::MatrixXd cov =
          dense_inverse(assemble_precision(dagar_factors(g, ord, rho)).to_dense());
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          worst = std::max(worst, std::abs(cov(i, j) - std::pow(rho, d(i, j))));
    }
  }
  report.checks.push_back(detail::bounded("inverse equals rho^d entrywise", worst, 1e-10,
                                          std::to_string(n_trees) + " random trees, k <= " +
                                              std::to_string(max_k)));
  report.checks.push_back({"breadth-first ordering gives one parent per non-root vertex",
                           parents_ok, parents_ok ? 0.0 : 1.0, 0.5, ""});
  report.seconds = timer.seconds();
  return report;
}

// Grids: any coordinate-sum ordering yields unit variances and neighbour
// covariances exactly rho.
inline SuiteReport grid_suite(int m = 10, int n = 10,
                              std::vector<double> rhos = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
                                                          0.8, 0.9}) {
  detail::Stopwatch timer;
  SuiteReport report;
  report.suite = "grid";
  const auto [g, emb] = grid_graph(m, n);
  const std::vector<std::pair<CoordKey, CoordDir>> directions = {
      {CoordKey::sum, CoordDir::increasing},
      {CoordKey::sum, CoordDir::decreasing},
      {CoordKey::difference, CoordDir::increasing},
      {CoordKey::difference, CoordDir::decreasing}};
  double worst_var = 0.0, worst_cov = 0.0;
  for (const auto& [key, dir] : directions) {
    const Ordering ord = coordinate_sum_ordering(emb, g, key, dir);
    for (double rho : rhos) {
      const Eigen::MatrixXd cov =
          dense_inverse(assemble_precision(dagar_factors(g, ord, rho)).to_dense());
      worst_var = std::max(worst_var, (cov.diagonal().array() - 1.0).abs().maxCoeff());
      for (int i = 0; i < g.k(); ++i)
        for (int j : g.neighbors(i))
          worst_cov = std::max(worst_cov, std::abs(cov(i, j) - rho));
    }
  }
  report.checks.push_back(detail::bounded("unit variances", worst_var, 1e-10,
                                          "four coordinate orderings"));
  report.checks.push_back(detail::bounded("neighbour covariances equal rho", worst_cov, 1e-10));
  report.seconds = timer.seconds();
  return report;
}

namespace detail {

// All labelled connected graphs on k vertices by edge-mask enumeration.
template <class Fn>
void for_each_connected_graph(int k, Fn&& fn) {
  std::vector<std::pair<int, int>> all_pairs;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) all_pairs.emplace_back(i, j);
  const int n_pairs = static_cast<int>(all_pairs.size());
  for (std::uint32_t mask = 0; mask < (1u << n_pairs); ++mask) {
    std::vector<std::pair<int, int>> edges;
    for (int b = 0; b < n_pairs; ++b)
      if (mask & (1u << b)) edges.push_back(all_pairs[b]);
    const Graph g = from_edge_list(std::max(k, 1), edges);
    if (is_connected(g)) fn(g);
  }
}

}  // namespace detail

// Order-free closed form against the k!-average brute force. Exhaustive
// enumeration beyond k = 6 is rejected (2^21 edge masks times 5040
// orderings is out of reach).
inline SuiteReport orderfree_suite(int exhaustive_max_k = 5, int n_random = 100,
                                   std::vector<double> rhos = {0.25, 0.5, 0.9},
                                   std::uint64_t seed = 20240809, int threads = 1) {
  if (exhaustive_max_k < 1 || exhaustive_max_k > 6)
    throw validation_error("orderfree suite: exhaustive max k must lie in 1..6");
  detail::Stopwatch timer;
  SuiteReport report;
  report.suite = "orderfree";
  double worst_exh = 0.0;
  long n_graphs = 0;
  for (int k = 1; k <= exhaustive_max_k; ++k)
    detail::for_each_connected_graph(k, [&](const Graph& g) {
      ++n_graphs;
      for (double rho : rhos) {
        const Eigen::MatrixXd closed = orderfree_precision(g, rho).to_dense();
        const Eigen::MatrixXd brute = bruteforce_orderfree(g, rho, threads);
        worst_exh = std::max(worst_exh, (closed - brute).cwiseAbs().maxCoeff());
      }
    });
  report.checks.push_back(detail::bounded(
      "exhaustive closed form vs brute force (k <= " + std::to_string(exhaustive_max_k) + ")",
      worst_exh, 1e-10, std::to_string(n_graphs) + " labelled connected graphs"));

  Rng rng(seed);
  double worst_rand = 0.0;
  for (int t = 0; t < n_random; ++t) {
    const int k = 6 + static_cast<int>(rng.uniform_below(2));  // k in {6,7}
    const Graph g = random_connected_graph(k, 0.35, rng);
    for (double rho : rhos) {
      const Eigen::MatrixXd closed = orderfree_precision(g, rho).to_dense();
      const Eigen::MatrixXd brute = bruteforce_orderfree(g, rho, threads);
      worst_rand = std::max(worst_rand, (closed - brute).cwiseAbs().maxCoeff());
    }
  }
  report.checks.push_back(detail::bounded("random graphs k in {6,7}", worst_rand, 1e-10,
                                          std::to_string(n_random) + " graphs"));
  report.seconds = timer.seconds();
  return report;
}

// Frobenius-norm limits: empirical ratios at finite size against the
// closed-form limits, plus the limiting rho -> 1 values.
inline SuiteReport frobenius_suite(int path_k = 2000, int grid_m = 60,
                                   std::vector<double> rhos = {0.25, 0.5, 0.75}) {
  detail::Stopwatch timer;
  SuiteReport report;
  report.suite = "frobenius";
  const double rho_limit = 1.0 - 1e-6;

  {
    const auto [g, emb] = path_graph(path_k);
    const Ordering ord = identity_ordering(g);
    double worst = 0.0;
    for (double rho : rhos) {
      const double ratio =
          frobenius_ratio(assemble_precision(dagar_factors(g, ord, rho)),
                          orderfree_precision(g, rho));
      worst = std::max(worst, std::abs(ratio - rhs_path(rho)));
    }
    report.checks.push_back(detail::bounded("path k=" + std::to_string(path_k) +
                                                " ratio vs closed-form limit",
                                            worst, 0.01));
    const double ratio1 =
        frobenius_ratio(assemble_precision(dagar_factors(g, ord, rho_limit)),
                        orderfree_precision(g, rho_limit));
    report.checks.push_back(detail::bounded("path limit at rho -> 1 vs sqrt(3/87)",
                                            std::abs(ratio1 - std::sqrt(3.0 / 87.0)), 0.01,
                                            "ratio " + fmt17(ratio1)));
  }
  {
    const auto [g, emb] = grid_graph(grid_m, grid_m);
    const Ordering ord = coordinate_sum_ordering(emb, g);
    double worst = 0.0;
    for (double rho : rhos) {
      const double ratio =
          frobenius_ratio(assemble_precision(dagar_factors(g, ord, rho)),
                          orderfree_precision(g, rho));
      worst = std::max(worst, std::abs(ratio - rhs_grid(rho)));
    }
    report.checks.push_back(detail::bounded("grid m=" + std::to_string(grid_m) +
                                                " ratio vs closed-form limit",
                                            worst, 0.01));
    const double ratio1 =
        frobenius_ratio(assemble_precision(dagar_factors(g, ord, rho_limit)),
                        orderfree_precision(g, rho_limit));
    report.checks.push_back(detail::bounded("grid limit at rho -> 1 vs 0.17",
                                            std::abs(ratio1 - 0.17), 0.02,
                                            "ratio " + fmt17(ratio1)));
  }
  report.checks.push_back({"rhs_path monotone on [0,1]", [] {
                             double prev = -1.0;
                             for (int i = 0; i <= 100; ++i) {
                               const double v = rhs_path(i / 100.0);
                               if (v < prev - 1e-12) return false;
                               prev = v;
                             }
                             return true;
                           }(),
                           0.0, 1.0, "101-point grid"});
  // the grid limit peaks at rho ~ 0.985 and drops ~2.3e-5 by rho = 1; the
  // check allows exactly that much, no more
  report.checks.push_back({"rhs_grid monotone on [0,1] up to 5e-5", [] {
                             double prev = -1.0;
                             for (int i = 0; i <= 100; ++i) {
                               const double v = rhs_grid(i / 100.0);
                               if (v < prev - 5e-5) return false;
                               prev = std::max(prev, v);
                             }
                             return true;
                           }(),
                           0.0, 1.0, "101-point grid"});
  report.seconds = timer.seconds();
  return report;
}

// Permuted LDL^T on the singular improper CAR precision: exact
// reconstruction with one zero pivot per connected component.
inline SuiteReport ldl_suite(const std::string& data_dir = "") {
  detail::Stopwatch timer;
  SuiteReport report;
  report.suite = "ldl";
  struct Case {
    std::string name;
    Graph graph;
  };
  std::vector<Case> cases;
  cases.push_back({"path k=100", path_graph(100).graph});
  cases.push_back({"grid 10x10", grid_graph(10, 10).graph});
  cases.push_back({"US states", load_us48(data_dir).graph});
  for (const auto& c : cases) {
    const Eigen::MatrixXd q = car_precision(c.graph, 1.0, CarVariant::improper).to_dense();
    const LDLFactor f = permuted_ldl_psd(q);
    const int k = c.graph.k();
    Eigen::MatrixXd pqp(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) pqp(a, b) = q(f.perm[a], f.perm[b]);
    const double err = (pqp - f.reconstruct()).cwiseAbs().maxCoeff();
    report.checks.push_back(detail::bounded(c.name + " reconstruction", err, 1e-8));
    const long zeros = (f.diag.array() == 0.0).count();
    report.checks.push_back({c.name + " zero pivots", zeros == 1,
                             static_cast<double>(zeros), 1.5,
                             "rank " + std::to_string(f.rank) + " of " + std::to_string(k)});
  }
  report.seconds = timer.seconds();
  return report;
}

}  // namespace dagar::verify
