#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "dagar/detail/parallel.hpp"
#include "dagar/errors.hpp"
#include "dagar/graph.hpp"
#include "dagar/inference.hpp"
#include "dagar/metrics.hpp"
#include "dagar/rng.hpp"

namespace dagar {

// Pairwise Euclidean distances of the embedding, rescaled so the average
// neighbour-pair distance equals one.
inline Eigen::MatrixXd scaled_distance_matrix(const Graph& g, const Embedding& emb) {
  emb.validate(g.k());
  const int k = g.k();
  Eigen::MatrixXd d(k, k);
  for (int i = 0; i < k; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < k; ++j) {
      const double dx = emb.coords[i][0] - emb.coords[j][0];
      const double dy = emb.coords[i][1] - emb.coords[j][1];
      d(i, j) = d(j, i) = std::sqrt(dx * dx + dy * dy);
    }
  }
  double nbr_sum = 0.0;
  long long nbr_cnt = 0;
  for (int i = 0; i < k; ++i)
    for (int j : g.neighbors(i)) {
      nbr_sum += d(i, j);
      ++nbr_cnt;
    }
  if (nbr_cnt == 0) return d;
  const double scale = nbr_sum / static_cast<double>(nbr_cnt);
  if (!(scale > 0.0))
    throw validation_error("distance scaling: some neighbouring vertices coincide");
  return d / scale;
}

// Latent field from an exponential Gaussian process: M_ij = exp(-phi d_ij)
// with neighbour-pair correlation exp(-phi). By default M/tau_w is read as
// the covariance (marginal variance 1/tau_w); matrix_is_precision flips the
// interpretation.
inline Eigen::VectorXd exp_gp_field(const Graph& g, const Embedding& emb, double phi,
                                    double tau_w, Rng& rng, bool matrix_is_precision = false) {
  if (!(phi > 0.0)) throw validation_error("exp_gp_field: phi must be positive");
  if (!(tau_w > 0.0)) throw validation_error("exp_gp_field: tau_w must be positive");
  const Eigen::MatrixXd d = scaled_distance_matrix(g, emb);
  const int k = g.k();
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (!(d(i, j) > 0.0))
        throw validation_error("exp_gp_field: coincident embedding points " +
                               std::to_string(i + 1) + " and " + std::to_string(j + 1));
  const Eigen::MatrixXd m = (-phi * d.array()).exp().matrix();
  Eigen::VectorXd z(k);
  for (int i = 0; i < k; ++i) z[i] = rng.normal();
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw numerical_error("exp_gp_field: kernel matrix is not positive definite");
  if (matrix_is_precision) {
    // precision M/tau_w: solve L^T w = z, scale by sqrt(tau_w)
    return std::sqrt(tau_w) *
           llt.matrixU().solve(z);
  }
  return (llt.matrixL() * z) / std::sqrt(tau_w);
}

// Gaussian responses y = X beta + w + eps with noise precision tau_e.
inline Eigen::VectorXd simulate_response(const Eigen::VectorXd& w, const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& beta, double tau_e, Rng& rng) {
  if (!(tau_e > 0.0)) throw validation_error("simulate_response: tau_e must be positive");
  if (X.rows() != w.size() || X.cols() != beta.size())
    throw validation_error("simulate_response: dimension mismatch");
  Eigen::VectorXd y = w;
  if (X.cols() > 0) y += X * beta;
  const double sd = 1.0 / std::sqrt(tau_e);
  for (int i = 0; i < y.size(); ++i) y[i] += sd * rng.normal();
  return y;
}

struct ExperimentGraph {
  std::string name;
  Graph graph;
  Embedding embedding;
};

struct ExperimentConfig {
  std::vector<ExperimentGraph> graphs;
  std::vector<double> rho_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> noise_ratios = {0.1, 0.5};  // r = tau_w / tau_e
  double tau_w = 0.25;
  Eigen::VectorXd beta = (Eigen::VectorXd(2) << 1.0, 5.0).finished();
  std::vector<ModelKind> models = {ModelKind::dagar, ModelKind::dagar_orderfree,
                                   ModelKind::car_proper, ModelKind::car_improper};
  int replicates = 20;
  MCMCConfig mcmc;  // desk scale by default, see make_desk_config
  Priors priors;
  std::uint64_t seed = 0;
  int threads = 1;
  bool field_matrix_is_precision = false;

  void validate() const {
    if (graphs.empty()) throw validation_error("experiment: no graphs");
    if (replicates < 1) throw validation_error("experiment: replicates must be >= 1");
    for (double r : rho_grid)
      if (!(r > 0.0 && r < 1.0))
        throw validation_error("experiment: rho grid values must lie in (0,1)");
    for (double r : noise_ratios)
      if (!(r > 0.0)) throw validation_error("experiment: noise ratios must be positive");
    if (!(tau_w > 0.0)) throw validation_error("experiment: tau_w must be positive");
  }
};

inline MCMCConfig make_desk_mcmc() {
  MCMCConfig cfg;
  cfg.iterations = 10000;
  cfg.burn_in = 5000;
  return cfg;
}

struct ExperimentCell {
  std::string graph;
  double rho = 0, r = 0;
  ModelKind model = ModelKind::dagar;
  int replicate = 0;
  bool ok = false;
  std::string error;
  double mse_w = 0;
  Eigen::VectorXd beta_estimate;  // posterior medians
  Eigen::VectorXd beta_sd;        // posterior standard deviations
  double seconds = 0;
};

struct ExperimentResult {
  std::vector<ExperimentCell> cells;
  std::uint64_t seed = 0;
};

// Full factorial sweep: for each (graph, rho, r, replicate) simulate one
// dataset from the exponential-GP design and fit every requested model on
// it. Replicates run in parallel; all randomness is derived by splitting
// the master seed by cell index, so results do not depend on scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Job {
    int graph_idx;
    double rho, r;
    int replicate;
  };
  std::vector<Job> jobs;
  for (int gi = 0; gi < static_cast<int>(cfg.graphs.size()); ++gi)
    for (double rho : cfg.rho_grid)
      for (double r : cfg.noise_ratios)
        for (int rep = 0; rep < cfg.replicates; ++rep)
          jobs.push_back({gi, rho, r, rep});

  // per-graph orderings (sum-of-coordinates, increasing), built once
  std::vector<Ordering> orderings;
  orderings.reserve(cfg.graphs.size());
  for (const auto& eg : cfg.graphs)
    orderings.push_back(coordinate_sum_ordering(eg.embedding, eg.graph));

  const int n_models = static_cast<int>(cfg.models.size());
  std::vector<std::vector<ExperimentCell>> rows(jobs.size());
  const Rng master(cfg.seed);

  detail::parallel_for(static_cast<int>(jobs.size()), cfg.threads, [&](int ji) {
    const Job& job = jobs[ji];
    const auto& eg = cfg.graphs[job.graph_idx];
    const int k = eg.graph.k();
    Rng rng = master.split(static_cast<std::uint64_t>(ji));

    const double phi = -std::log(job.rho);
    const Eigen::VectorXd w_true =
        exp_gp_field(eg.graph, eg.embedding, phi, cfg.tau_w, rng, cfg.field_matrix_is_precision);
    const int p = static_cast<int>(cfg.beta.size());
    Eigen::MatrixXd X(k, p);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    const double tau_e = cfg.tau_w / job.r;
    const Eigen::VectorXd y = simulate_response(w_true, X, cfg.beta, tau_e, rng);

    auto& out = rows[ji];
    out.resize(n_models);
    for (int mi = 0; mi < n_models; ++mi) {
      ExperimentCell& cell = out[mi];
      cell.graph = eg.name;
      cell.rho = job.rho;
      cell.r = job.r;
      cell.model = cfg.models[mi];
      cell.replicate = job.replicate + 1;
      ModelSpec spec;
      spec.kind = cfg.models[mi];
      spec.graph = eg.graph;
      spec.ordering = orderings[job.graph_idx];
      spec.link = Link::identity;
      spec.X = X;
      MCMCConfig mc = cfg.mcmc;
      mc.seed = rng.split(1000 + mi).next_u64();
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const ChainOutput chain = fit_gaussian(y, spec, cfg.priors, mc);
        const Eigen::VectorXd w_mean = chain.w.colwise().mean().transpose();
        cell.mse_w = mse(w_true, w_mean);
        cell.beta_estimate.resize(p);
        cell.beta_sd.resize(p);
        for (int j = 0; j < p; ++j) {
          std::vector<double> col(chain.scalars.col(j).data(),
                                  chain.scalars.col(j).data() + chain.n_draws());
          cell.beta_estimate[j] = quantile_type7(std::move(col), 0.5);
          const double mean = chain.scalars.col(j).mean();
          cell.beta_sd[j] =
              std::sqrt((chain.scalars.col(j).array() - mean).square().mean());
        }
        cell.ok = true;
      } catch (const std::exception& ex) {
        cell.ok = false;
        cell.error = ex.what();
      }
      cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  });

  ExperimentResult result;
  result.seed = cfg.seed;
  for (auto& r : rows)
    for (auto& c : r) result.cells.push_back(std::move(c));
  return result;
}

}  // namespace dagar
