#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dagar/detail/parallel.hpp"
#include "dagar/errors.hpp"
#include "dagar/graph.hpp"
#include "dagar/inference.hpp"
#include "dagar/linalg.hpp"
#include "dagar/precision.hpp"
#include "dagar/sparse.hpp"

namespace dagar {

// Average correlation over neighbour pairs implied by a precision matrix:
// invert densely, average corr(w_i, w_j) over the (ordered) adjacent pairs.
// Guarded: dense inversion only up to k = 2000.
inline double avg_neighbor_correlation(const Eigen::MatrixXd& q, const Graph& g) {
  if (q.rows() != g.k())
    throw validation_error("avg_neighbor_correlation: matrix/graph dimension mismatch");
  if (g.k() > 2000)
    throw validation_error("avg_neighbor_correlation: k exceeds the dense-inversion guard (2000)");
  const Eigen::MatrixXd cov = dense_inverse(q);
  double s = 0.0;
  long long pairs = 0;
  for (int i = 0; i < g.k(); ++i)
    for (int j : g.neighbors(i)) {
      s += cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
      ++pairs;
    }
  if (pairs == 0) return 0.0;
  return s / static_cast<double>(pairs);
}

inline double avg_neighbor_correlation(const SparseSymmetric& q, const Graph& g) {
  return avg_neighbor_correlation(q.to_dense(), g);
}

inline double avg_neighbor_correlation(const CholeskyPrecision& cp, const Graph& g) {
  return avg_neighbor_correlation(assemble_precision(cp).to_dense(), g);
}

inline double mse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate) {
  if (truth.size() != estimate.size())
    throw validation_error("mse: vector lengths differ");
  return (truth - estimate).squaredNorm() / static_cast<double>(truth.size());
}

// || Q - Q_of ||_F / || Q_of ||_F
inline double frobenius_ratio(const SparseSymmetric& q, const SparseSymmetric& q_of) {
  if (q.dim() != q_of.dim()) throw validation_error("frobenius_ratio: dimension mismatch");
  return SparseSymmetric::frobenius_distance(q, q_of) / q_of.frobenius_norm();
}

// Closed-form large-k limit of the path-graph Frobenius ratio:
//   sqrt( (4 rho^8 + 2 rho^4) /
//         ((3 + 6 rho^2 + rho^4)^2 + 18 rho^2 (1 + rho^2)^2 + 2 rho^4) ).
// Monotone in rho, maximum sqrt(3/87) ~ 0.186 at rho = 1.
inline double rhs_path(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw validation_error("rhs_path: rho must lie in [0,1]");
  const double u = rho * rho;
  const double num = 4.0 * u * u * u * u + 2.0 * u * u;
  const double a = 3.0 + 6.0 * u + u * u;
  const double den = a * a + 18.0 * u * (1.0 + u) * (1.0 + u) + 2.0 * u * u;
  return std::sqrt(num / den);
}

// Same limit for the m x m grid under coordinate-sum orderings, with
// s(rho) = f_weight(rho, 4); maximum ~ 0.17 at rho = 1.
inline double rhs_grid(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw validation_error("rhs_grid: rho must lie in [0,1]");
  const double u = rho * rho;
  double s = 0.0;
  for (int r = 1; r <= 4; ++r) s += r / (1.0 + (r - 1) * u);
  const double t1 = s / 5.0 - 2.0 / (1.0 + u);
  const double t2 = 1.0 / 3.0 - s / 30.0 - u / (1.0 + u);
  const double t3 = 1.0 / 6.0 - s / 60.0;
  const double num = u * u * t1 * t1 + 2.0 * t2 * t2 + 12.0 * t3 * t3;
  const double d1 = 1.0 + u + u * s / 5.0;
  const double den = d1 * d1 + 4.0 * u + 20.0 * t3 * t3;
  return std::sqrt(num / den);
}

// Deviance information criterion: DIC = Dbar + pD with D = -2 log lik and
// pD = Dbar - D(at posterior means); the plug-in uses posterior means of
// (beta, w) jointly (and tau_e for Gaussian responses), focused on the
// observation-level likelihood.
inline double dic(const ChainOutput& chain) {
  if (chain.loglik.empty())
    throw validation_error("dic: chain carries no likelihood trace");
  double dbar = 0.0;
  for (double ll : chain.loglik) dbar += -2.0 * ll;
  dbar /= static_cast<double>(chain.loglik.size());
  const double dhat = -2.0 * chain.plugin_loglik;
  return 2.0 * dbar - dhat;  // Dbar + (Dbar - Dhat)
}

struct LooOptions {
  int inner_draws = 200;  // latent draws from the conditional prior per posterior draw
  int threads = 1;        // regions refit independently; 0 = hardware
};

// Leave-one-out cross-validated log posterior predictive density: for each
// region refit without its likelihood term, then integrate the held-out
// latent from its conditional prior given the sampled field,
//   p(y_i | y_-i) ~= 1/(M L) sum_m sum_l p(y_i | x_i'b_m + w_il, theta_m),
// and return sum_i log of that. Refits are expensive (k full chains) but
// independent across regions; all seeds split off the master, so the result
// does not depend on the thread count.
inline double loo_lppd(const Eigen::VectorXd& data, const ModelSpec& spec, const Priors& priors,
                       const MCMCConfig& cfg, const LooOptions& opt = {}) {
  spec.validate();
  const int k = spec.k();
  const Rng master(cfg.seed);
  std::vector<double> lppd(k, 0.0);
  detail::parallel_for(k, opt.threads, [&](int hold) {
    MCMCConfig sub = cfg;
    std::vector<bool> obs(k, true);
    if (cfg.observed) obs = *cfg.observed;
    obs[hold] = false;
    sub.observed = obs;
    sub.seed = master.split(0xBEEF0000u + static_cast<std::uint64_t>(hold)).next_u64();
    ChainOutput chain;
    try {
      chain = spec.link == Link::identity ? fit_gaussian(data, spec, priors, sub)
                                          : fit_poisson(data, spec, priors, sub);
    } catch (const std::exception& ex) {
      throw numerical_error("loo_lppd: refit without region " + std::to_string(hold + 1) +
                            " failed: " + ex.what());
    }
    Rng inner = master.split(0xFACE0000u + static_cast<std::uint64_t>(hold));
    const int p = spec.p();
    const int tau_w_col = chain.scalar_index("tau_w");
    const int tau_e_col = chain.scalar_index("tau_e");
    const int rho_col = chain.scalar_index("rho");
    // log-sum-exp over all (posterior draw, inner draw) pairs
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(chain.n_draws()) * opt.inner_draws);
    for (long m = 0; m < chain.n_draws(); ++m) {
      const double tau_w = chain.scalars(m, tau_w_col);
      const double rho = chain.scalars(m, rho_col);
      const SparseSymmetric q =
          build_precision(spec.kind, spec.graph, spec.ordering, rho, spec.allow_disconnected);
      double qii = 0.0, s = 0.0;
      q.for_each_in_row(hold, [&](int j, double v) {
        if (j == hold) qii = v;
        else s += v * chain.w(m, j);
      });
      const double cond_mean = -s / qii;
      const double cond_sd = 1.0 / std::sqrt(tau_w * qii);
      double xb = 0.0;
      for (int j = 0; j < p; ++j) xb += spec.X(hold, j) * chain.scalars(m, j);
      for (int l = 0; l < opt.inner_draws; ++l) {
        const double wi = cond_mean + cond_sd * inner.normal();
        double logdens;
        if (spec.link == Link::identity) {
          const double tau_e = chain.scalars(m, tau_e_col);
          const double r = data[hold] - xb - wi;
          logdens = 0.5 * std::log(tau_e / (2.0 * M_PI)) - 0.5 * tau_e * r * r;
        } else {
          const double eta = xb + wi;
          logdens = data[hold] * (std::log(spec.offsets[hold]) + eta) -
                    spec.offsets[hold] * std::exp(eta) - std::lgamma(data[hold] + 1.0);
        }
        terms.push_back(logdens);
        max_term = std::max(max_term, logdens);
      }
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    lppd[hold] = max_term + std::log(acc / static_cast<double>(terms.size()));
  });
  double total = 0.0;
  for (double v : lppd) total += v;
  return total;
}

}  // namespace dagar
