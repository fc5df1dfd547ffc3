#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "dagar/errors.hpp"
#include "dagar/graph.hpp"
#include "dagar/sparse.hpp"

namespace dagar {

inline void check_rho(double rho, const char* who) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw validation_error(std::string(who) + ": rho must lie in [0,1), got " +
                           std::to_string(rho));
}

// DAGAR Cholesky factors. Each vertex regresses on its directed neighbours
// with a common coefficient b_i and conditional precision tau_i:
//   b_i   = rho / (1 + (n_i - 1) rho^2)
//   tau_i = (1 + (n_i - 1) rho^2) / (1 - rho^2)
// where n_i counts directed neighbours. A vertex with no directed
// neighbours has tau_i = 1 (unit marginal variance), which the formula
// already yields at n_i = 0. The precision is Q = (I-B)^T F (I-B) in the
// ordered frame; everything here stays in original vertex indexing.
struct CholeskyPrecision {
  Ordering ordering;
  std::vector<double> b;    // unused at vertices with no directed neighbours
  std::vector<double> tau;
  double rho = 0.0;

  int k() const { return ordering.k(); }
};

inline CholeskyPrecision dagar_factors(const Graph& g, const Ordering& ord, double rho,
                                       bool allow_disconnected = false) {
  check_rho(rho, "dagar_factors");
  if (ord.k() != g.k()) throw validation_error("dagar_factors: ordering does not match graph");
  long long directed_total = 0;
  for (int i = 0; i < g.k(); ++i) {
    for (int j : ord.directed_neighbors[i])
      if (!g.has_edge(i, j))
        throw validation_error("dagar_factors: ordering was built for a different graph");
    directed_total += ord.directed_counts[i];
  }
  if (directed_total != g.e())
    throw validation_error("dagar_factors: ordering was built for a different graph");
  if (!allow_disconnected && !is_connected(g))
    throw structure_error("dagar_factors: graph is disconnected "
                          "(enable block-diagonal treatment to allow islands)");
  CholeskyPrecision cp;
  cp.ordering = ord;
  cp.rho = rho;
  const int k = g.k();
  cp.b.resize(k);
  cp.tau.resize(k);
  const double r2 = rho * rho;
  for (int i = 0; i < k; ++i) {
    const int n = ord.directed_counts[i];
    const double base = 1.0 + (n - 1) * r2;
    cp.b[i] = n > 0 ? rho / base : 0.0;
    cp.tau[i] = base / (1.0 - r2);
  }
  return cp;
}

// log det Q = sum_i log tau_i, an O(k) closed form.
inline double dagar_logdet(const CholeskyPrecision& cp) {
  double s = 0.0;
  for (double t : cp.tau) s += std::log(t);
  return s;
}

// w' Q w via the factored form sum_i tau_i (w_i - b_i sum_{j in N(i)} w_j)^2,
// O(k + e) flops.
inline double quadratic_form(const CholeskyPrecision& cp, const Eigen::VectorXd& w) {
  const int k = cp.k();
  if (w.size() != k)
    throw validation_error("quadratic_form: vector length does not match factor dimension");
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    double r = w[i];
    if (cp.ordering.directed_counts[i] > 0) {
      double nb = 0.0;
      for (int j : cp.ordering.directed_neighbors[i]) nb += w[j];
      r -= cp.b[i] * nb;
    }
    s += cp.tau[i] * r * r;
  }
  return s;
}

namespace detail {

// Structural triplets of the assembled DAGAR precision: the pattern depends
// only on the ordering, not on rho, so a sampler can rebuild values in a
// fixed pattern while rho moves.
inline std::vector<std::tuple<int, int, double>> dagar_triplets(const CholeskyPrecision& cp) {
  std::vector<std::tuple<int, int, double>> trip;
  const int k = cp.k();
  trip.reserve(static_cast<std::size_t>(k) * 4);
  for (int i = 0; i < k; ++i) {
    const auto& nbrs = cp.ordering.directed_neighbors[i];
    const double tau = cp.tau[i];
    const double tb = tau * cp.b[i];
    const double tbb = tb * cp.b[i];
    trip.emplace_back(i, i, tau);
    for (std::size_t a = 0; a < nbrs.size(); ++a) {
      trip.emplace_back(i, nbrs[a], -tb);
      trip.emplace_back(nbrs[a], nbrs[a], tbb);
      for (std::size_t c = a + 1; c < nbrs.size(); ++c)
        trip.emplace_back(nbrs[a], nbrs[c], tbb);
    }
  }
  return trip;
}

}  // namespace detail

// Explicit sparse Q = (I-B)^T F (I-B) in original vertex indexing. The
// pattern is contained in the second-order graph of the ordering's graph.
inline SparseSymmetric assemble_precision(const CholeskyPrecision& cp) {
  return SparseSymmetric(cp.k(), detail::dagar_triplets(cp));
}

// f(rho, n) = sum_{r=1}^{n} r / (1 + (r-1) rho^2); the shared combinatorial
// weight behind the order-free entries. s(rho) = f(rho, 4).
inline double f_weight(double rho, int n) {
  check_rho(rho, "f_weight");
  if (n < 1) throw validation_error("f_weight: n must be a positive integer");
  const double r2 = rho * rho;
  double s = 0.0;
  for (int r = 1; r <= n; ++r) s += r / (1.0 + (r - 1) * r2);
  return s;
}

// Order-free DAGAR precision: the average of the ordered precisions over
// all k! orderings, in closed form. With u = rho^2 and f = f_weight:
//   Q_ii = 1 + n_i u / (2(1-u)) + u/(1-u) * sum_{j~i} f(rho,n_j)/(n_j(n_j+1))
//   Q_ij = -rho/(1-u) [i~j]
//          + 1/(1-u) [i and j share neighbours] *
//            sum_m [ 1/(2(n_m-1)) - f(rho,n_m)/((n_m-1) n_m (n_m+1)) ]
// where m runs over common neighbours. The pattern is the second-order
// graph plus the diagonal; cost O(e_2 * n_max) after an O(n_max) table of
// f values per rho.
inline SparseSymmetric orderfree_precision(const Graph& g, double rho,
                                           bool allow_disconnected = false) {
  check_rho(rho, "orderfree_precision");
  if (!allow_disconnected && !is_connected(g))
    throw structure_error("orderfree_precision: graph is disconnected "
                          "(enable block-diagonal treatment to allow islands)");
  const int k = g.k();
  const double u = rho * rho;
  const double inv = 1.0 / (1.0 - u);

  // f(rho, r) for r = 1..max degree, plus the derived per-degree weights
  const int nmax = std::max(1, g.max_degree());
  std::vector<double> f(nmax + 1, 0.0);
  {
    double acc = 0.0;
    for (int r = 1; r <= nmax; ++r) {
      acc += r / (1.0 + (r - 1) * u);
      f[r] = acc;
    }
  }
  std::vector<double> diag_w(nmax + 1, 0.0);   // f(rho,n)/(n(n+1))
  std::vector<double> common_w(nmax + 1, 0.0); // 1/(2(n-1)) - f(rho,n)/((n-1)n(n+1))
  for (int n = 1; n <= nmax; ++n) {
    diag_w[n] = f[n] / (static_cast<double>(n) * (n + 1));
    if (n >= 2)
      common_w[n] = 0.5 / (n - 1) - f[n] / (static_cast<double>(n - 1) * n * (n + 1));
  }

  const Graph g2 = second_order_graph(g);
  std::vector<std::tuple<int, int, double>> trip;
  trip.reserve(static_cast<std::size_t>(k) + static_cast<std::size_t>(g2.e()));
  std::vector<char> nb_mark(k, 0);
  for (int i = 0; i < k; ++i) {
    double qii = 1.0 + g.degree(i) * u * 0.5 * inv;
    for (int j : g.neighbors(i)) qii += u * inv * diag_w[g.degree(j)];
    trip.emplace_back(i, i, qii);

    for (int j : g.neighbors(i)) nb_mark[j] = 1;
    for (int j : g2.neighbors(i)) {
      if (j < i) continue;  // assemble the upper triangle once
      double v = nb_mark[j] ? -rho * inv : 0.0;
      for (int m : g.neighbors(i))
        if (g.has_edge(m, j)) {
          // a common neighbour has degree >= 2 by definition
          detail::require(g.degree(m) >= 2, "orderfree: common neighbour of degree < 2");
          v += inv * common_w[g.degree(m)];
        }
      trip.emplace_back(i, j, v);
    }
    for (int j : g.neighbors(i)) nb_mark[j] = 0;
  }
  return SparseSymmetric(k, std::move(trip));
}

// Exact k!-average of the ordered precisions by explicit enumeration; the
// independent oracle for the closed form above. Guarded at k <= 8.
inline Eigen::MatrixXd bruteforce_orderfree(const Graph& g, double rho, int n_threads = 1) {
  check_rho(rho, "bruteforce_orderfree");
  const int k = g.k();
  if (k > 8)
    throw validation_error("bruteforce_orderfree: k = " + std::to_string(k) +
                           " exceeds the k <= 8 enumeration guard");
  std::uint64_t total = 1;
  for (int i = 2; i <= k; ++i) total *= i;

  // One ordered precision, accumulated densely.
  auto accumulate = [&](const std::vector<int>& pi, Eigen::MatrixXd& acc) {
    std::vector<int> pos(k);
    for (int t = 0; t < k; ++t) pos[pi[t]] = t;
    const double r2 = rho * rho;
    std::vector<int> nbrs;
    for (int i = 0; i < k; ++i) {
      nbrs.clear();
      for (int j : g.neighbors(i))
        if (pos[j] < pos[i]) nbrs.push_back(j);
      const int n = static_cast<int>(nbrs.size());
      const double base = 1.0 + (n - 1) * r2;
      const double tau = base / (1.0 - r2);
      const double b = n > 0 ? rho / base : 0.0;
      acc(i, i) += tau;
      for (int a = 0; a < n; ++a) {
        acc(i, nbrs[a]) -= tau * b;
        acc(nbrs[a], i) -= tau * b;
        for (int c = 0; c < n; ++c) acc(nbrs[a], nbrs[c]) += tau * b * b;
      }
    }
  };

  // Permutations are enumerated in lexicographic order and partitioned into
  // contiguous index ranges; partials are reduced in partition order so a
  // given thread count always reproduces the same bits.
  const int workers = std::max(1, n_threads);
  std::vector<Eigen::MatrixXd> partial(workers, Eigen::MatrixXd::Zero(k, k));
  auto run_range = [&](std::uint64_t lo, std::uint64_t hi, Eigen::MatrixXd& acc) {
    std::vector<int> pi(k);
    std::iota(pi.begin(), pi.end(), 0);
    // advance to the lo-th permutation in lexicographic order
    for (std::uint64_t t = 0; t < lo; ++t) std::next_permutation(pi.begin(), pi.end());
    for (std::uint64_t t = lo; t < hi; ++t) {
      accumulate(pi, acc);
      std::next_permutation(pi.begin(), pi.end());
    }
  };
  if (workers == 1) {
    run_range(0, total, partial[0]);
  } else {
    std::vector<std::thread> pool;
    for (int wkr = 0; wkr < workers; ++wkr) {
      const std::uint64_t lo = total * wkr / workers;
      const std::uint64_t hi = total * (wkr + 1) / workers;
      pool.emplace_back(run_range, lo, hi, std::ref(partial[wkr]));
    }
    for (auto& t : pool) t.join();
  }
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);
  for (const auto& p : partial) acc += p;
  return acc / static_cast<double>(total);
}

enum class CarVariant { proper, improper };

// Conditional autoregressive precision D - rho A. The improper variant
// pins rho = 1 and is singular (rank k - number of islands, Q 1 = 0); the
// proper variant requires rho in [0,1), where strict diagonal dominance
// guarantees positive definiteness.
inline SparseSymmetric car_precision(const Graph& g, double rho, CarVariant variant,
                                     bool allow_disconnected = false) {
  if (variant == CarVariant::proper) {
    check_rho(rho, "car_precision(proper)");
  } else {
    rho = 1.0;
  }
  if (!allow_disconnected && !is_connected(g))
    throw structure_error("car_precision: graph is disconnected "
                          "(enable block-diagonal treatment to allow islands)");
  const int k = g.k();
  std::vector<std::tuple<int, int, double>> trip;
  trip.reserve(static_cast<std::size_t>(k) + static_cast<std::size_t>(g.e()));
  for (int i = 0; i < k; ++i) {
    trip.emplace_back(i, i, static_cast<double>(g.degree(i)));
    for (int j : g.neighbors(i))
      if (j > i) trip.emplace_back(i, j, -rho);
  }
  return SparseSymmetric(k, std::move(trip));
}

}  // namespace dagar
