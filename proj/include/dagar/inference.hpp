#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "dagar/errors.hpp"
#include "dagar/graph.hpp"
#include "dagar/linalg.hpp"
#include "dagar/precision.hpp"
#include "dagar/rng.hpp"
#include "dagar/sparse.hpp"

namespace dagar {

enum class ModelKind { dagar, dagar_orderfree, car_proper, car_improper };
enum class Link { identity, log };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::dagar: return "dagar";
    case ModelKind::dagar_orderfree: return "dagar-of";
    case ModelKind::car_proper: return "car";
    case ModelKind::car_improper: return "icar";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "dagar") return ModelKind::dagar;
  if (s == "dagar-of" || s == "dagar_of" || s == "dagarof") return ModelKind::dagar_orderfree;
  if (s == "car") return ModelKind::car_proper;
  if (s == "icar" || s == "car-improper") return ModelKind::car_improper;
  throw validation_error("unknown model kind '" + s + "' (expected dagar, dagar-of, car, icar)");
}

// One-shot precision assembly by model kind (rho is ignored for the
// improper variant, which is pinned at 1).
inline SparseSymmetric build_precision(ModelKind kind, const Graph& g,
                                       const std::optional<Ordering>& ordering, double rho,
                                       bool allow_disconnected = false) {
  switch (kind) {
    case ModelKind::dagar: {
      if (!ordering) throw validation_error("build_precision: DAGAR requires an ordering");
      return assemble_precision(dagar_factors(g, *ordering, rho, allow_disconnected));
    }
    case ModelKind::dagar_orderfree:
      return orderfree_precision(g, rho, allow_disconnected);
    case ModelKind::car_proper:
      return car_precision(g, rho, CarVariant::proper, allow_disconnected);
    case ModelKind::car_improper:
      return car_precision(g, 1.0, CarVariant::improper, allow_disconnected);
  }
  throw std::logic_error("build_precision: unreachable");
}

// Model description for a hierarchical fit: h(E(y_i)) = x_i' beta + w_i with
// w ~ N(0, tau_w Q(rho)).
struct ModelSpec {
  ModelKind kind = ModelKind::dagar;
  Graph graph;
  std::optional<Ordering> ordering;  // required for kind == dagar
  Link link = Link::identity;
  Eigen::MatrixXd X;                 // k x p design (p may be 0)
  Eigen::VectorXd offsets;           // expected counts E_i, log link only
  bool allow_disconnected = false;

  // Pin individual parameters (degenerate-limit checks, block-wise tests).
  std::optional<double> fixed_rho;
  std::optional<double> fixed_tau_w;
  std::optional<double> fixed_tau_e;

  int k() const { return graph.k(); }
  int p() const { return static_cast<int>(X.cols()); }

  void validate() const {
    if (graph.k() < 1) throw validation_error("model: empty graph");
    if (X.size() > 0 && X.rows() != graph.k())
      throw validation_error("model: design matrix has " + std::to_string(X.rows()) +
                             " rows for " + std::to_string(graph.k()) + " regions");
    if (kind == ModelKind::dagar) {
      if (!ordering) throw validation_error("model: DAGAR requires a vertex ordering");
      if (ordering->k() != graph.k())
        throw validation_error("model: ordering does not match graph");
    }
    if (link == Link::log) {
      if (offsets.size() != graph.k())
        throw validation_error("model: log link requires one expected count per region");
      for (int i = 0; i < offsets.size(); ++i)
        if (!(offsets[i] > 0.0))
          throw validation_error("model: expected count must be positive at region " +
                                 std::to_string(i + 1));
    }
    if (X.size() > 0) {
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(X);
      if (lu.rank() < X.cols())
        throw validation_error("model: design matrix is rank deficient");
    }
  }

  // Column of ones, if any: the intercept that absorbs the level of an
  // improper CAR field.
  int intercept_column() const {
    for (int j = 0; j < X.cols(); ++j)
      if (X.rows() > 0 && (X.col(j).array() == 1.0).all()) return j;
    return -1;
  }
};

struct Priors {
  double beta_precision = 1e-3;  // beta ~ N(0, 1000 I) on the variance scale
  double tau_w_shape = 2.0, tau_w_rate = 1.0;
  double tau_e_shape = 2.0, tau_e_rate = 0.1;
  // Gamma second parameters are rates by default; set false to read the
  // same numbers as scales.
  bool gamma_is_rate = true;

  double tau_w_rate_effective() const { return gamma_is_rate ? tau_w_rate : 1.0 / tau_w_rate; }
  double tau_e_rate_effective() const { return gamma_is_rate ? tau_e_rate : 1.0 / tau_e_rate; }

  void validate() const {
    if (!(beta_precision > 0) || !(tau_w_shape > 0) || !(tau_w_rate > 0) ||
        !(tau_e_shape > 0) || !(tau_e_rate > 0))
      throw validation_error("priors: all hyperparameters must be positive");
  }
};

struct MCMCConfig {
  long iterations = 100000;
  long burn_in = 50000;
  long thin = 1;
  std::uint64_t seed = 0;

  double rho_proposal_sd = 0.5;   // logit scale
  double w_proposal_sd = 0.5;     // per-site initial (log link)
  double beta_proposal_sd = 0.1;  // per-coefficient initial (log link)
  bool adapt = true;              // Robbins-Monro toward 0.44, burn-in only

  // Which blocks move (all by default); handy for conditional-law tests.
  bool update_w = true, update_beta = true, update_tau_w = true, update_tau_e = true,
       update_rho = true;

  std::optional<Eigen::VectorXd> init_w, init_beta;
  std::optional<double> init_tau_w, init_tau_e, init_rho;

  // Per-region likelihood inclusion; false = held out (prior-only region).
  std::optional<std::vector<bool>> observed;

  void validate() const {
    if (iterations < 1 || burn_in < 0 || burn_in >= iterations)
      throw validation_error("mcmc: need 0 <= burn_in < iterations");
    if (thin < 1) throw validation_error("mcmc: thin must be >= 1");
    if (!(rho_proposal_sd > 0) || !(w_proposal_sd > 0) || !(beta_proposal_sd > 0))
      throw validation_error("mcmc: proposal standard deviations must be positive");
  }
};

// Retained draws plus everything model comparison needs afterwards.
struct ChainOutput {
  std::vector<std::string> scalar_names;
  Eigen::MatrixXd scalars;  // n_draws x n_scalars
  Eigen::MatrixXd w;        // n_draws x k
  std::vector<double> loglik;  // observation log likelihood per draw
  double plugin_loglik = 0.0;  // at posterior means of (beta, w[, tau_e])
  std::map<std::string, double> acceptance;
  std::uint64_t seed = 0;
  long iterations = 0, burn_in = 0, thin = 1;
  int precision_rank = 0;

  long n_draws() const { return scalars.rows(); }

  int scalar_index(const std::string& name) const {
    for (std::size_t i = 0; i < scalar_names.size(); ++i)
      if (scalar_names[i] == name) return static_cast<int>(i);
    return -1;
  }

  Eigen::VectorXd column(const std::string& name) const {
    const int i = scalar_index(name);
    if (i < 0) throw validation_error("chain has no parameter named '" + name + "'");
    return scalars.col(i);
  }
};

// ---------------------------------------------------------------------------
// Shared handle over the four precision models. Keeps Q(rho) assembled in a
// fixed pattern, exposes log det and quadratic forms, and evaluates both at
// a candidate rho without committing (for Metropolis steps).
class PrecisionModel {
 public:
  PrecisionModel(ModelKind kind, const Graph& g, const std::optional<Ordering>& ord,
                 double rho0, bool allow_disconnected = false)
      : kind_(kind), g_(&g) {
    int islands = 0;
    component_labels(g, &islands);
    if (!allow_disconnected && islands != 1)
      throw structure_error("precision model: graph is disconnected "
                            "(enable block-diagonal treatment to allow islands)");
    allow_disconnected_ = allow_disconnected;
    rank_ = kind == ModelKind::car_improper ? g.k() - islands : g.k();
    if (kind == ModelKind::dagar) {
      if (!ord) throw validation_error("precision model: DAGAR requires an ordering");
      ordering_ = *ord;
    }
    rho_ = kind == ModelKind::car_improper ? 1.0 : rho0;
    rebuild_current();
    if (kind_ != ModelKind::dagar && kind_ != ModelKind::car_improper)
      chol_.emplace(q_);
    refresh_logdet();
  }

  ModelKind kind() const { return kind_; }
  int k() const { return g_->k(); }
  int rank() const { return rank_; }
  bool rho_is_free() const { return kind_ != ModelKind::car_improper; }
  double rho() const { return rho_; }
  const SparseSymmetric& Q() const { return q_; }
  const Graph& graph() const { return *g_; }

  // log det Q(rho); undefined for the improper variant.
  double logdet() const {
    detail::require(kind_ != ModelKind::car_improper, "logdet of singular improper CAR");
    return logdet_;
  }

  double quad(const Eigen::VectorXd& w) const {
    if (kind_ == ModelKind::dagar) return quadratic_form(*cp_, w);
    return q_.quad_form(w);
  }

  // (log det, w'Qw) at a candidate rho; leaves the committed state alone but
  // caches the candidate so an accept can reuse it.
  std::pair<double, double> evaluate_candidate(double rho, const Eigen::VectorXd& w) {
    detail::require(rho_is_free(), "candidate rho on improper CAR");
    if (kind_ == ModelKind::dagar) {
      candidate_cp_ = dagar_factors(*g_, ordering_, rho, allow_disconnected_);
      candidate_rho_ = rho;
      return {dagar_logdet(*candidate_cp_), quadratic_form(*candidate_cp_, w)};
    }
    candidate_q_ = build_q(rho);
    candidate_rho_ = rho;
    chol_->refactorize(*candidate_q_);
    candidate_logdet_ = chol_->logdet();
    return {candidate_logdet_, candidate_q_->quad_form(w)};
  }

  void commit_candidate() {
    detail::require(candidate_rho_.has_value(), "no candidate rho to commit");
    rho_ = *candidate_rho_;
    if (kind_ == ModelKind::dagar) {
      cp_ = std::move(*candidate_cp_);
      q_ = assemble_precision(*cp_);
      logdet_ = dagar_logdet(*cp_);
    } else {
      q_ = std::move(*candidate_q_);
      logdet_ = candidate_logdet_;
    }
    candidate_rho_.reset();
    candidate_cp_.reset();
    candidate_q_.reset();
  }

  void set_rho(double rho) {
    detail::require(rho_is_free(), "set_rho on improper CAR");
    rho_ = rho;
    rebuild_current();
    if (chol_) chol_->refactorize(q_);
    refresh_logdet();
  }

  // Prior field draw w ~ N(0, tau_w Q(rho)); improper CAR cannot generate.
  Eigen::VectorXd sample_prior(double tau_w, Rng& rng) const {
    if (kind_ == ModelKind::car_improper)
      throw numerical_error("improper CAR prior is singular; cannot generate from it");
    if (kind_ == ModelKind::dagar) return sample_mvn_precision(*cp_, tau_w, rng);
    SparseCholesky chol(q_);
    return sample_mvn_precision(chol, tau_w, rng);
  }

 private:
  SparseSymmetric build_q(double rho) const {
    switch (kind_) {
      case ModelKind::dagar_orderfree:
        return orderfree_precision(*g_, rho, allow_disconnected_);
      case ModelKind::car_proper:
        return car_precision(*g_, rho, CarVariant::proper, allow_disconnected_);
      case ModelKind::car_improper:
        return car_precision(*g_, 1.0, CarVariant::improper, allow_disconnected_);
      case ModelKind::dagar:
        break;
    }
    throw std::logic_error("build_q: unreachable");
  }

  void rebuild_current() {
    if (kind_ == ModelKind::dagar) {
      cp_ = dagar_factors(*g_, ordering_, rho_, allow_disconnected_);
      q_ = assemble_precision(*cp_);
    } else {
      q_ = build_q(rho_);
    }
  }

  void refresh_logdet() {
    if (kind_ == ModelKind::dagar) logdet_ = dagar_logdet(*cp_);
    else if (kind_ == ModelKind::car_improper) logdet_ = 0.0;
    else logdet_ = chol_->logdet();
  }

  ModelKind kind_;
  const Graph* g_;
  Ordering ordering_;
  bool allow_disconnected_ = false;
  int rank_ = 0;
  double rho_ = 0.5;
  std::optional<CholeskyPrecision> cp_;
  SparseSymmetric q_;
  double logdet_ = 0.0;
  std::optional<SparseCholesky> chol_;  // reusable symbolic pattern (OF / proper CAR)

  std::optional<double> candidate_rho_;
  std::optional<CholeskyPrecision> candidate_cp_;
  std::optional<SparseSymmetric> candidate_q_;
  double candidate_logdet_ = 0.0;
};

namespace detail {

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double inv_logit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Robbins-Monro step size toward the 0.44 acceptance target.
inline double adapt_gamma(long sweep) { return std::pow(static_cast<double>(sweep) + 1.0, -0.6); }

struct AcceptCounter {
  long long tried = 0, accepted = 0;
  void add(bool acc) { ++tried; accepted += acc ? 1 : 0; }
  double rate() const { return tried == 0 ? 0.0 : static_cast<double>(accepted) / tried; }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Gaussian response: y_i = x_i' beta + w_i + eps_i with noise precision
// tau_e. All blocks but rho are conjugate; rho moves by a logit random walk.
class GaussianGibbs {
 public:
  GaussianGibbs(const ModelSpec& spec, const Priors& priors, const MCMCConfig& cfg,
                Eigen::VectorXd y)
      : spec_(spec),
        priors_(priors),
        cfg_(cfg),
        y_(std::move(y)),
        rng_(cfg.seed),
        prec_(spec.kind, spec.graph, spec.ordering,
              spec.fixed_rho.value_or(cfg.init_rho.value_or(0.5)), spec.allow_disconnected) {
    spec_.validate();
    priors_.validate();
    cfg_.validate();
    if (spec_.link != Link::identity)
      throw validation_error("fit_gaussian requires the identity link");
    const int k = spec_.k();
    if (y_.size() != k)
      throw validation_error("fit_gaussian: response length " + std::to_string(y_.size()) +
                             " does not match region count " + std::to_string(k));
    observed_.assign(k, true);
    if (cfg_.observed) {
      if (static_cast<int>(cfg_.observed->size()) != k)
        throw validation_error("fit_gaussian: observation mask length mismatch");
      observed_ = *cfg_.observed;
    }
    for (int i = 0; i < k; ++i)
      if (observed_[i] && !std::isfinite(y_[i]))
        throw validation_error("fit_gaussian: non-finite response at region " +
                               std::to_string(i + 1));
    n_obs_ = std::count(observed_.begin(), observed_.end(), true);

    beta_ = cfg_.init_beta.value_or(Eigen::VectorXd::Zero(spec_.p()));
    if (beta_.size() != spec_.p()) throw validation_error("init_beta has wrong length");
    w_ = cfg_.init_w.value_or(Eigen::VectorXd::Zero(k));
    if (w_.size() != k) throw validation_error("init_w has wrong length");
    tau_w_ = spec_.fixed_tau_w.value_or(cfg_.init_tau_w.value_or(priors_.tau_w_shape /
                                                                 priors_.tau_w_rate_effective()));
    tau_e_ = spec_.fixed_tau_e.value_or(cfg_.init_tau_e.value_or(priors_.tau_e_shape /
                                                                 priors_.tau_e_rate_effective()));
    rho_sd_log_ = std::log(cfg_.rho_proposal_sd);
    intercept_col_ = spec_.intercept_column();
    // symbolic analysis once; the pattern never changes while rho moves
    w_chol_.emplace(w_conditional_precision());
  }

  // --- conditional laws (exposed so tests can pin them down exactly) ---

  SparseSymmetric w_conditional_precision() const {
    Eigen::VectorXd d(spec_.k());
    for (int i = 0; i < spec_.k(); ++i) d[i] = observed_[i] ? tau_e_ : 0.0;
    return prec_.Q().scaled_plus_diagonal(tau_w_, d);
  }

  Eigen::VectorXd w_conditional_linear() const {
    Eigen::VectorXd r = y_;
    if (spec_.p() > 0) r -= spec_.X * beta_;
    for (int i = 0; i < spec_.k(); ++i) r[i] = observed_[i] ? tau_e_ * r[i] : 0.0;
    return r;
  }

  // beta | rest ~ N(A^{-1} b, A)
  std::pair<Eigen::MatrixXd, Eigen::VectorXd> beta_conditional() const {
    const int p = spec_.p();
    Eigen::MatrixXd a = priors_.beta_precision * Eigen::MatrixXd::Identity(p, p);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    for (int i = 0; i < spec_.k(); ++i) {
      if (!observed_[i]) continue;
      a.noalias() += tau_e_ * spec_.X.row(i).transpose() * spec_.X.row(i);
      b.noalias() += tau_e_ * (y_[i] - w_[i]) * spec_.X.row(i).transpose();
    }
    return {a, b};
  }

  std::pair<double, double> tau_e_conditional() const {  // (shape, rate)
    double ssr = 0.0;
    for (int i = 0; i < spec_.k(); ++i) {
      if (!observed_[i]) continue;
      double r = y_[i] - w_[i];
      if (spec_.p() > 0) r -= spec_.X.row(i).dot(beta_);
      ssr += r * r;
    }
    return {priors_.tau_e_shape + 0.5 * n_obs_, priors_.tau_e_rate_effective() + 0.5 * ssr};
  }

  std::pair<double, double> tau_w_conditional() const {
    return {priors_.tau_w_shape + 0.5 * prec_.rank(),
            priors_.tau_w_rate_effective() + 0.5 * prec_.quad(w_)};
  }

  // --- one full Gibbs scan ---
  void sweep(long sweep_index, bool adapting) {
    if (cfg_.update_beta && spec_.p() > 0) draw_beta();
    if (cfg_.update_w) draw_w();
    if (cfg_.update_w && cfg_.update_beta && intercept_col_ >= 0 &&
        spec_.kind != ModelKind::car_improper)
      level_move();
    if (cfg_.update_tau_e && !spec_.fixed_tau_e) draw_tau_e();
    if (cfg_.update_tau_w && !spec_.fixed_tau_w) draw_tau_w();
    if (cfg_.update_rho && prec_.rho_is_free() && !spec_.fixed_rho)
      update_rho(sweep_index, adapting);
    if (spec_.kind == ModelKind::car_improper && intercept_col_ >= 0) recenter();
  }

  double loglik() const {
    double ll = 0.0;
    const double half_log = 0.5 * std::log(tau_e_ / (2.0 * M_PI));
    for (int i = 0; i < spec_.k(); ++i) {
      if (!observed_[i]) continue;
      double r = y_[i] - w_[i];
      if (spec_.p() > 0) r -= spec_.X.row(i).dot(beta_);
      ll += half_log - 0.5 * tau_e_ * r * r;
    }
    return ll;
  }

  double loglik_at(const Eigen::VectorXd& beta, const Eigen::VectorXd& w, double tau_e) const {
    double ll = 0.0;
    const double half_log = 0.5 * std::log(tau_e / (2.0 * M_PI));
    for (int i = 0; i < spec_.k(); ++i) {
      if (!observed_[i]) continue;
      double r = y_[i] - w[i];
      if (spec_.p() > 0) r -= spec_.X.row(i).dot(beta);
      ll += half_log - 0.5 * tau_e * r * r;
    }
    return ll;
  }

  // state access (Geweke-style tests drive these)
  const Eigen::VectorXd& beta() const { return beta_; }
  const Eigen::VectorXd& w() const { return w_; }
  double tau_w() const { return tau_w_; }
  double tau_e() const { return tau_e_; }
  double rho() const { return prec_.rho(); }
  Rng& rng() { return rng_; }
  const PrecisionModel& precision_model() const { return prec_; }
  const std::vector<bool>& observed() const { return observed_; }

  void set_state(const Eigen::VectorXd& beta, const Eigen::VectorXd& w, double tau_w,
                 double tau_e, std::optional<double> rho = std::nullopt) {
    beta_ = beta;
    w_ = w;
    tau_w_ = tau_w;
    tau_e_ = tau_e;
    if (rho && prec_.rho_is_free()) prec_.set_rho(*rho);
  }
  void set_response(Eigen::VectorXd y) { y_ = std::move(y); }

  const detail::AcceptCounter& rho_acceptance() const { return rho_acc_; }

 private:
  void draw_beta() {
    auto [a, b] = beta_conditional();
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
      throw numerical_error("beta update: conditional precision not PD");
    const Eigen::VectorXd mean = llt.solve(b);
    Eigen::VectorXd z(spec_.p());
    for (int i = 0; i < z.size(); ++i) z[i] = rng_.normal();
    beta_ = mean + llt.matrixU().solve(z);
  }

  void draw_w() {
    w_chol_->refactorize(w_conditional_precision());
    const Eigen::VectorXd mean = w_chol_->solve(w_conditional_linear());
    Eigen::VectorXd z(spec_.k());
    for (int i = 0; i < z.size(); ++i) z[i] = rng_.normal();
    w_ = mean + w_chol_->solve_upper_unpermute(z);
  }

  void draw_tau_e() {
    auto [shape, rate] = tau_e_conditional();
    tau_e_ = rng_.gamma(shape, rate);
  }

  void draw_tau_w() {
    auto [shape, rate] = tau_w_conditional();
    tau_w_ = rng_.gamma(shape, rate);
  }

  void update_rho(long sweep_index, bool adapting) {
    const double rho = prec_.rho();
    const double theta = detail::logit(rho);
    const double sd = std::exp(rho_sd_log_);
    const double theta_new = theta + sd * rng_.normal();
    const double rho_new = detail::inv_logit(theta_new);
    bool accept = false;
    if (rho_new > 0.0 && rho_new < 1.0) {
      const auto [ld_new, qf_new] = prec_.evaluate_candidate(rho_new, w_);
      const double cur = 0.5 * prec_.logdet() - 0.5 * tau_w_ * prec_.quad(w_) +
                         std::log(rho) + std::log1p(-rho);
      const double cand = 0.5 * ld_new - 0.5 * tau_w_ * qf_new + std::log(rho_new) +
                          std::log1p(-rho_new);
      accept = std::log(rng_.uniform()) < cand - cur;
    }
    if (accept) prec_.commit_candidate();
    rho_acc_.add(accept);
    if (adapting && cfg_.adapt)
      rho_sd_log_ += detail::adapt_gamma(sweep_index) * ((accept ? 1.0 : 0.0) - 0.44);
  }

  void recenter() {
    const double mean = w_.mean();
    w_.array() -= mean;
    beta_[intercept_col_] += mean;
  }

  // Translation move along the likelihood-flat direction (w + d, alpha - d):
  // the identity-link residual is invariant, so d has the conjugate law
  // N((kappa alpha - tau_w 1'Qw) / p, p) with p = tau_w 1'Q1 + kappa.
  // Sitewise and blockwise updates alone traverse this ridge very slowly.
  void level_move() {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(spec_.k());
    const double c = prec_.quad(ones);
    const double s = prec_.Q().multiply(w_).sum();
    const double p = tau_w_ * c + priors_.beta_precision;
    const double mean = (priors_.beta_precision * beta_[intercept_col_] - tau_w_ * s) / p;
    const double delta = mean + rng_.normal() / std::sqrt(p);
    w_.array() += delta;
    beta_[intercept_col_] -= delta;
  }

  ModelSpec spec_;
  Priors priors_;
  MCMCConfig cfg_;
  Eigen::VectorXd y_;
  Rng rng_;
  PrecisionModel prec_;
  std::vector<bool> observed_;
  long n_obs_ = 0;
  int intercept_col_ = -1;

  Eigen::VectorXd beta_, w_;
  double tau_w_ = 1.0, tau_e_ = 1.0;
  double rho_sd_log_ = 0.0;
  std::optional<SparseCholesky> w_chol_;
  detail::AcceptCounter rho_acc_;
};

// ---------------------------------------------------------------------------
// Poisson response with log link and offsets: O_i ~ Poisson(E_i exp(eta_i)),
// eta_i = x_i' beta + w_i. Sitewise random-walk Metropolis for w, random
// walks for beta coordinates and rho; tau_w stays conjugate given (w, rho).
class PoissonSampler {
 public:
  PoissonSampler(const ModelSpec& spec, const Priors& priors, const MCMCConfig& cfg,
                 Eigen::VectorXd counts)
      : spec_(spec),
        priors_(priors),
        cfg_(cfg),
        counts_(std::move(counts)),
        rng_(cfg.seed),
        prec_(spec.kind, spec.graph, spec.ordering,
              spec.fixed_rho.value_or(cfg.init_rho.value_or(0.5)), spec.allow_disconnected) {
    spec_.validate();
    priors_.validate();
    cfg_.validate();
    if (spec_.link != Link::log) throw validation_error("fit_poisson requires the log link");
    const int k = spec_.k();
    if (counts_.size() != k)
      throw validation_error("fit_poisson: count vector length does not match region count");
    observed_.assign(k, true);
    if (cfg_.observed) {
      if (static_cast<int>(cfg_.observed->size()) != k)
        throw validation_error("fit_poisson: observation mask length mismatch");
      observed_ = *cfg_.observed;
    }
    for (int i = 0; i < k; ++i) {
      if (!observed_[i]) continue;
      if (!(counts_[i] >= 0) || counts_[i] != std::floor(counts_[i]))
        throw validation_error("fit_poisson: counts must be non-negative integers (region " +
                               std::to_string(i + 1) + ")");
    }
    log_offsets_ = spec_.offsets.array().log();

    beta_ = cfg_.init_beta.value_or(Eigen::VectorXd::Zero(spec_.p()));
    if (beta_.size() != spec_.p()) throw validation_error("init_beta has wrong length");
    w_ = cfg_.init_w.value_or(Eigen::VectorXd::Zero(k));
    if (w_.size() != k) throw validation_error("init_w has wrong length");
    tau_w_ = spec_.fixed_tau_w.value_or(cfg_.init_tau_w.value_or(priors_.tau_w_shape /
                                                                 priors_.tau_w_rate_effective()));
    eta_ = w_;
    if (spec_.p() > 0) eta_ += spec_.X * beta_;
    w_sd_log_.assign(k, std::log(cfg_.w_proposal_sd));
    beta_sd_log_.assign(spec_.p(), std::log(cfg_.beta_proposal_sd));
    rho_sd_log_ = std::log(cfg_.rho_proposal_sd);
    intercept_col_ = spec_.intercept_column();
  }

  void sweep(long sweep_index, bool adapting) {
    if (cfg_.update_w) update_w_sites(sweep_index, adapting);
    if (cfg_.update_beta && spec_.p() > 0) update_beta(sweep_index, adapting);
    if (cfg_.update_w && cfg_.update_beta && intercept_col_ >= 0 &&
        spec_.kind != ModelKind::car_improper)
      level_move();
    if (cfg_.update_tau_w && !spec_.fixed_tau_w) {
      tau_w_ = rng_.gamma(priors_.tau_w_shape + 0.5 * prec_.rank(),
                          priors_.tau_w_rate_effective() + 0.5 * prec_.quad(w_));
    }
    if (cfg_.update_rho && prec_.rho_is_free() && !spec_.fixed_rho)
      update_rho(sweep_index, adapting);
    if (spec_.kind == ModelKind::car_improper && intercept_col_ >= 0) recenter();
  }

  double loglik() const { return loglik_at(eta_); }

  double loglik_at_state(const Eigen::VectorXd& beta, const Eigen::VectorXd& w) const {
    Eigen::VectorXd eta = w;
    if (spec_.p() > 0) eta += spec_.X * beta;
    return loglik_at(eta);
  }

  const Eigen::VectorXd& beta() const { return beta_; }
  const Eigen::VectorXd& w() const { return w_; }
  double tau_w() const { return tau_w_; }
  double rho() const { return prec_.rho(); }
  const PrecisionModel& precision_model() const { return prec_; }
  Rng& rng() { return rng_; }

  double w_acceptance_rate() const { return w_acc_.rate(); }
  double beta_acceptance_rate() const { return beta_acc_.rate(); }
  double rho_acceptance_rate() const { return rho_acc_.rate(); }

 private:
  double site_loglik(int i, double eta) const {
    return counts_[i] * (log_offsets_[i] + eta) - spec_.offsets[i] * std::exp(eta) -
           std::lgamma(counts_[i] + 1.0);
  }

  double loglik_at(const Eigen::VectorXd& eta) const {
    double ll = 0.0;
    for (int i = 0; i < spec_.k(); ++i)
      if (observed_[i]) ll += site_loglik(i, eta[i]);
    return ll;
  }

  void update_w_sites(long sweep_index, bool adapting) {
    const SparseSymmetric& q = prec_.Q();
    for (int i = 0; i < spec_.k(); ++i) {
      // s_i = sum_{j != i} Q_ij w_j
      double s = 0.0;
      double qii = 0.0;
      q.for_each_in_row(i, [&](int j, double v) {
        if (j == i) qii = v;
        else s += v * w_[j];
      });
      if (!observed_[i]) {
        // no likelihood term: exact conjugate draw from the prior conditional
        const double mean = -s / qii;
        const double newv = mean + rng_.normal() / std::sqrt(tau_w_ * qii);
        eta_[i] += newv - w_[i];
        w_[i] = newv;
        continue;
      }
      const double sd = std::exp(w_sd_log_[i]);
      const double wi_new = w_[i] + sd * rng_.normal();
      const double eta_new = eta_[i] + (wi_new - w_[i]);
      const double dlik = site_loglik(i, eta_new) - site_loglik(i, eta_[i]);
      const double dprior =
          -0.5 * tau_w_ * ((wi_new * wi_new - w_[i] * w_[i]) * qii + 2.0 * (wi_new - w_[i]) * s);
      const bool accept = std::log(rng_.uniform()) < dlik + dprior;
      if (accept) {
        w_[i] = wi_new;
        eta_[i] = eta_new;
      }
      w_acc_.add(accept);
      if (adapting && cfg_.adapt)
        w_sd_log_[i] += detail::adapt_gamma(sweep_index) * ((accept ? 1.0 : 0.0) - 0.44);
    }
  }

  void update_beta(long sweep_index, bool adapting) {
    for (int j = 0; j < spec_.p(); ++j) {
      const double sd = std::exp(beta_sd_log_[j]);
      const double delta = sd * rng_.normal();
      const double bj_new = beta_[j] + delta;
      double dlik = 0.0;
      for (int i = 0; i < spec_.k(); ++i) {
        if (!observed_[i]) continue;
        const double eta_new = eta_[i] + spec_.X(i, j) * delta;
        dlik += site_loglik(i, eta_new) - site_loglik(i, eta_[i]);
      }
      const double dprior = -0.5 * priors_.beta_precision * (bj_new * bj_new - beta_[j] * beta_[j]);
      const bool accept = std::log(rng_.uniform()) < dlik + dprior;
      if (accept) {
        eta_ += spec_.X.col(j) * delta;
        beta_[j] = bj_new;
      }
      beta_acc_.add(accept);
      if (adapting && cfg_.adapt)
        beta_sd_log_[j] += detail::adapt_gamma(sweep_index) * ((accept ? 1.0 : 0.0) - 0.44);
    }
  }

  void update_rho(long sweep_index, bool adapting) {
    const double rho = prec_.rho();
    const double sd = std::exp(rho_sd_log_);
    const double theta_new = detail::logit(rho) + sd * rng_.normal();
    const double rho_new = detail::inv_logit(theta_new);
    bool accept = false;
    if (rho_new > 0.0 && rho_new < 1.0) {
      const auto [ld_new, qf_new] = prec_.evaluate_candidate(rho_new, w_);
      const double cur = 0.5 * prec_.logdet() - 0.5 * tau_w_ * prec_.quad(w_) +
                         std::log(rho) + std::log1p(-rho);
      const double cand = 0.5 * ld_new - 0.5 * tau_w_ * qf_new + std::log(rho_new) +
                          std::log1p(-rho_new);
      accept = std::log(rng_.uniform()) < cand - cur;
    }
    if (accept) prec_.commit_candidate();
    rho_acc_.add(accept);
    if (adapting && cfg_.adapt)
      rho_sd_log_ += detail::adapt_gamma(sweep_index) * ((accept ? 1.0 : 0.0) - 0.44);
  }

  void recenter() {
    const double mean = w_.mean();
    w_.array() -= mean;
    beta_[intercept_col_] += mean;
    // eta is invariant under the shift
  }

  // Same translation move as the Gaussian sampler: eta_i = x_i'beta + w_i
  // is invariant under (w + d, alpha - d), so the Poisson likelihood drops
  // out and d is conjugate normal.
  void level_move() {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(spec_.k());
    const double c = prec_.quad(ones);
    const double s = prec_.Q().multiply(w_).sum();
    const double p = tau_w_ * c + priors_.beta_precision;
    const double mean = (priors_.beta_precision * beta_[intercept_col_] - tau_w_ * s) / p;
    const double delta = mean + rng_.normal() / std::sqrt(p);
    w_.array() += delta;
    beta_[intercept_col_] -= delta;
    // eta unchanged
  }

  ModelSpec spec_;
  Priors priors_;
  MCMCConfig cfg_;
  Eigen::VectorXd counts_;
  Rng rng_;
  PrecisionModel prec_;
  std::vector<bool> observed_;
  Eigen::VectorXd log_offsets_;
  int intercept_col_ = -1;

  Eigen::VectorXd beta_, w_, eta_;
  double tau_w_ = 1.0;
  std::vector<double> w_sd_log_, beta_sd_log_;
  double rho_sd_log_ = 0.0;
  detail::AcceptCounter w_acc_, beta_acc_, rho_acc_;
};

// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> scalar_names_for(const ModelSpec& spec) {
  std::vector<std::string> names;
  for (int j = 0; j < spec.p(); ++j) names.push_back("beta_" + std::to_string(j));
  names.push_back("tau_w");
  if (spec.link == Link::identity) names.push_back("tau_e");
  names.push_back("rho");
  return names;
}

}  // namespace detail

inline ChainOutput fit_gaussian(const Eigen::VectorXd& y, const ModelSpec& spec,
                                const Priors& priors, const MCMCConfig& cfg) {
  GaussianGibbs sampler(spec, priors, cfg, y);
  ChainOutput out;
  out.scalar_names = detail::scalar_names_for(spec);
  out.seed = cfg.seed;
  out.iterations = cfg.iterations;
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;
  out.precision_rank = sampler.precision_model().rank();
  const long retained = (cfg.iterations - cfg.burn_in) / cfg.thin;
  const int p = spec.p();
  out.scalars.resize(retained, static_cast<int>(out.scalar_names.size()));
  out.w.resize(retained, spec.k());
  out.loglik.reserve(retained);
  long row = 0;
  for (long it = 0; it < cfg.iterations; ++it) {
    sampler.sweep(it, it < cfg.burn_in);
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 && row < retained) {
      for (int j = 0; j < p; ++j) out.scalars(row, j) = sampler.beta()[j];
      out.scalars(row, p) = sampler.tau_w();
      out.scalars(row, p + 1) = sampler.tau_e();
      out.scalars(row, p + 2) = sampler.rho();
      out.w.row(row) = sampler.w().transpose();
      out.loglik.push_back(sampler.loglik());
      ++row;
    }
  }
  out.scalars.conservativeResize(row, Eigen::NoChange);
  out.w.conservativeResize(row, Eigen::NoChange);
  out.acceptance["rho"] = sampler.rho_acceptance().rate();
  const Eigen::VectorXd beta_mean =
      p > 0 ? Eigen::VectorXd(out.scalars.leftCols(p).colwise().mean().transpose())
            : Eigen::VectorXd(0);
  const Eigen::VectorXd w_mean = out.w.colwise().mean().transpose();
  const double tau_e_mean = out.scalars.col(p + 1).mean();
  out.plugin_loglik = sampler.loglik_at(beta_mean, w_mean, tau_e_mean);
  return out;
}

inline ChainOutput fit_poisson(const Eigen::VectorXd& counts, const ModelSpec& spec,
                               const Priors& priors, const MCMCConfig& cfg) {
  PoissonSampler sampler(spec, priors, cfg, counts);
  ChainOutput out;
  out.scalar_names = detail::scalar_names_for(spec);
  out.seed = cfg.seed;
  out.iterations = cfg.iterations;
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;
  out.precision_rank = sampler.precision_model().rank();
  const long retained = (cfg.iterations - cfg.burn_in) / cfg.thin;
  const int p = spec.p();
  out.scalars.resize(retained, static_cast<int>(out.scalar_names.size()));
  out.w.resize(retained, spec.k());
  out.loglik.reserve(retained);
  long row = 0;
  for (long it = 0; it < cfg.iterations; ++it) {
    sampler.sweep(it, it < cfg.burn_in);
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 && row < retained) {
      for (int j = 0; j < p; ++j) out.scalars(row, j) = sampler.beta()[j];
      out.scalars(row, p) = sampler.tau_w();
      out.scalars(row, p + 1) = sampler.rho();
      out.w.row(row) = sampler.w().transpose();
      out.loglik.push_back(sampler.loglik());
      ++row;
    }
  }
  out.scalars.conservativeResize(row, Eigen::NoChange);
  out.w.conservativeResize(row, Eigen::NoChange);
  out.acceptance["w"] = sampler.w_acceptance_rate();
  out.acceptance["beta"] = sampler.beta_acceptance_rate();
  out.acceptance["rho"] = sampler.rho_acceptance_rate();
  const Eigen::VectorXd beta_mean =
      p > 0 ? Eigen::VectorXd(out.scalars.leftCols(p).colwise().mean().transpose())
            : Eigen::VectorXd(0);
  const Eigen::VectorXd w_mean = out.w.colwise().mean().transpose();
  out.plugin_loglik = sampler.loglik_at_state(beta_mean, w_mean);
  return out;
}

// ---------------------------------------------------------------------------
// Posterior summaries: type-7 quantiles (linear interpolation between order
// statistics) and batch-means effective sample size.

inline double quantile_type7(std::vector<double> x, double p) {
  if (x.empty()) throw validation_error("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + (h - lo) * (x[lo + 1] - x[lo]);
}

inline double batch_means_ess(const Eigen::VectorXd& draws) {
  const long m = draws.size();
  if (m < 4) return static_cast<double>(m);
  const long batch = std::max<long>(1, static_cast<long>(std::floor(std::sqrt(m))));
  const long nb = m / batch;
  const double overall = draws.head(nb * batch).mean();
  double var_all = 0.0;
  for (long i = 0; i < nb * batch; ++i) {
    const double d = draws[i] - overall;
    var_all += d * d;
  }
  var_all /= (nb * batch - 1);
  if (var_all <= 0.0) return static_cast<double>(m);
  double var_bm = 0.0;
  for (long b = 0; b < nb; ++b) {
    const double bm = draws.segment(b * batch, batch).mean();
    var_bm += (bm - overall) * (bm - overall);
  }
  var_bm /= (nb - 1);
  const double tau = batch * var_bm / var_all;  // integrated autocorrelation time
  const double ess = static_cast<double>(m) / std::max(tau, 1e-12);
  return std::clamp(ess, 1.0, static_cast<double>(m));
}

struct ParameterSummary {
  std::string name;
  double median = 0, lower = 0, upper = 0, mean = 0, ess = 0;
};

struct PosteriorSummary {
  std::vector<ParameterSummary> scalars;
  std::vector<ParameterSummary> w;
};

inline ParameterSummary summarize_column(const std::string& name, const Eigen::VectorXd& col) {
  std::vector<double> v(col.data(), col.data() + col.size());
  ParameterSummary s;
  s.name = name;
  s.median = quantile_type7(v, 0.5);
  s.lower = quantile_type7(v, 0.025);
  s.upper = quantile_type7(v, 0.975);
  s.mean = col.mean();
  s.ess = batch_means_ess(col);
  return s;
}

inline PosteriorSummary posterior_summary(const ChainOutput& chain) {
  if (chain.n_draws() == 0) throw validation_error("posterior_summary: empty chain");
  PosteriorSummary out;
  for (std::size_t j = 0; j < chain.scalar_names.size(); ++j)
    out.scalars.push_back(
        summarize_column(chain.scalar_names[j], chain.scalars.col(static_cast<int>(j))));
  for (int v = 0; v < chain.w.cols(); ++v)
    out.w.push_back(summarize_column("w_" + std::to_string(v + 1), chain.w.col(v)));
  return out;
}

}  // namespace dagar
