#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dagar/errors.hpp"
#include "dagar/precision.hpp"
#include "dagar/rng.hpp"
#include "dagar/sparse.hpp"

namespace dagar {

// Sparse lower-triangular factor, rows with sorted column indices <= row.
// unit_diagonal factors omit the (implicit, unit) diagonal from storage.
struct SparseLowerTriangular {
  int k = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;
  std::vector<double> diag;  // empty when unit_diagonal
  bool unit_diagonal = false;

  // L y = b
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& b) const {
    Eigen::VectorXd y = b;
    for (int i = 0; i < k; ++i) {
      double s = y[i];
      for (int t = row_ptr[i]; t < row_ptr[i + 1]; ++t) s -= val[t] * y[col[t]];
      y[i] = unit_diagonal ? s : s / diag[i];
    }
    return y;
  }

  // L^T x = b
  Eigen::VectorXd solve_upper(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = b;
    for (int i = k - 1; i >= 0; --i) {
      if (!unit_diagonal) x[i] /= diag[i];
      const double xi = x[i];
      for (int t = row_ptr[i]; t < row_ptr[i + 1]; ++t) x[col[t]] -= val[t] * xi;
    }
    return x;
  }

  double logdet_of_product() const {  // log det(L L^T)
    detail::require(!unit_diagonal, "logdet: unit-diagonal factor");
    double s = 0.0;
    for (double d : diag) s += std::log(d);
    return 2.0 * s;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      for (int t = row_ptr[i]; t < row_ptr[i + 1]; ++t) m(i, col[t]) = val[t];
      m(i, i) = unit_diagonal ? 1.0 : diag[i];
    }
    return m;
  }
};

enum class EliminationOrder { natural, reverse_cuthill_mckee };

// Reverse Cuthill-McKee: BFS by ascending degree from a low-degree start
// in each component, reversed. Optional bandwidth-reducing preordering for
// the sparse factorization.
inline std::vector<int> reverse_cuthill_mckee(const SparseSymmetric& q) {
  const int k = q.dim();
  std::vector<std::vector<int>> adj(k);
  for (int i = 0; i < k; ++i)
    q.for_each_in_row(i, [&](int j, double) {
      if (j != i) adj[i].push_back(j);
    });
  for (auto& a : adj) std::sort(a.begin(), a.end(), [&](int x, int y) {
    return adj[x].size() != adj[y].size() ? adj[x].size() < adj[y].size() : x < y;
  });
  std::vector<int> order;
  order.reserve(k);
  std::vector<char> seen(k, 0);
  for (;;) {
    int start = -1;
    for (int v = 0; v < k; ++v)
      if (!seen[v] && (start < 0 || adj[v].size() < adj[start].size())) start = v;
    if (start < 0) break;
    seen[start] = 1;
    std::size_t head = order.size();
    order.push_back(start);
    while (head < order.size()) {
      for (int w : adj[order[head]])
        if (!seen[w]) {
          seen[w] = 1;
          order.push_back(w);
        }
      ++head;
    }
  }
  std::reverse(order.begin(), order.end());
  return order;  // order[pos] = vertex
}

// Sparse Cholesky Q = L L^T with exact symbolic fill (elimination-tree
// reach per row), up-looking numeric phase. The elimination order is the
// natural vertex order unless a fill-reducing permutation is requested;
// the deterministic natural default is what the test oracles pin down.
class SparseCholesky {
 public:
  explicit SparseCholesky(const SparseSymmetric& q,
                          EliminationOrder order = EliminationOrder::natural) {
    k_ = q.dim();
    if (order == EliminationOrder::reverse_cuthill_mckee) {
      perm_ = reverse_cuthill_mckee(q);
    } else {
      perm_.resize(k_);
      std::iota(perm_.begin(), perm_.end(), 0);
    }
    inv_perm_.resize(k_);
    for (int t = 0; t < k_; ++t) inv_perm_[perm_[t]] = t;
    analyze(q);
    factorize(q);
  }

  // Recompute values for a matrix with the same pattern (cheap refresh
  // inside samplers where only rho or the diagonal moved).
  void refactorize(const SparseSymmetric& q) { factorize(q); }

  const SparseLowerTriangular& factor() const { return L_; }
  double logdet() const { return L_.logdet_of_product(); }

  // Solve Q x = b (applies the elimination permutation on both sides).
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd pb(k_);
    for (int t = 0; t < k_; ++t) pb[t] = b[perm_[t]];
    Eigen::VectorXd px = L_.solve_upper(L_.solve_lower(pb));
    Eigen::VectorXd x(k_);
    for (int t = 0; t < k_; ++t) x[perm_[t]] = px[t];
    return x;
  }

  // Solve L^T u = z in permuted frame and undo the permutation: with
  // z ~ N(0, I) the result has precision Q.
  Eigen::VectorXd solve_upper_unpermute(const Eigen::VectorXd& z) const {
    Eigen::VectorXd pu = L_.solve_upper(z);
    Eigen::VectorXd u(k_);
    for (int t = 0; t < k_; ++t) u[perm_[t]] = pu[t];
    return u;
  }

 private:
  // Symbolic phase: elimination tree, then row patterns by walking parent
  // links from each structural entry (row-subtree characterisation of fill).
  void analyze(const SparseSymmetric& q) {
    analyzed_nnz_ = q.nnz_stored();
    std::vector<std::vector<int>> lower_rows(k_);  // A row patterns, cols < row (permuted)
    for (int i = 0; i < k_; ++i)
      q.for_each_in_row(i, [&](int j, double) {
        const int pi = inv_perm_[i], pj = inv_perm_[j];
        if (pj < pi) lower_rows[pi].push_back(pj);
        else if (pi < pj) lower_rows[pj].push_back(pi);
      });
    std::vector<int> parent(k_, -1), ancestor(k_, -1);
    for (int i = 0; i < k_; ++i)
      for (int a : lower_rows[i])
        for (int v = a; v != -1 && v < i;) {
          const int next = ancestor[v];
          ancestor[v] = i;
          if (next == -1) parent[v] = i;
          v = next;
        }
    std::vector<int> stamp(k_, -1);
    L_.k = k_;
    L_.unit_diagonal = false;
    L_.row_ptr.assign(k_ + 1, 0);
    L_.col.clear();
    std::vector<std::vector<int>> rows(k_);
    for (int i = 0; i < k_; ++i) {
      stamp[i] = i;
      auto& pat = rows[i];
      for (int a : lower_rows[i])
        for (int v = a; stamp[v] != i; v = parent[v]) {
          pat.push_back(v);
          stamp[v] = i;
        }
      std::sort(pat.begin(), pat.end());
      L_.row_ptr[i + 1] = L_.row_ptr[i] + static_cast<int>(pat.size());
    }
    L_.col.reserve(L_.row_ptr[k_]);
    for (const auto& pat : rows)
      for (int j : pat) L_.col.push_back(j);
    L_.val.assign(L_.col.size(), 0.0);
    L_.diag.assign(k_, 0.0);
    // column layout for the numeric scatter: entries of column j in row order
    col_ptr_.assign(k_ + 1, 0);
    for (int j : L_.col) ++col_ptr_[j + 1];
    for (int j = 0; j < k_; ++j) col_ptr_[j + 1] += col_ptr_[j];
    col_row_.resize(L_.col.size());
    col_val_pos_.resize(L_.col.size());
    std::vector<int> fill = col_ptr_;
    for (int i = 0; i < k_; ++i)
      for (int t = L_.row_ptr[i]; t < L_.row_ptr[i + 1]; ++t) {
        const int j = L_.col[t];
        col_row_[fill[j]] = i;
        col_val_pos_[fill[j]] = t;
        ++fill[j];
      }
  }

  void factorize(const SparseSymmetric& q) {
    if (q.dim() != k_) throw validation_error("sparse Cholesky: dimension changed");
    if (q.nnz_stored() != analyzed_nnz_)
      throw validation_error("sparse Cholesky: matrix pattern differs from the analysed one");
    std::vector<double> x(k_, 0.0);
    for (int i = 0; i < k_; ++i) {
      // load A row i (permuted), cols <= i
      double di = 0.0;
      const int orig_i = perm_[i];
      q.for_each_in_row(orig_i, [&](int orig_j, double v) {
        const int j = inv_perm_[orig_j];
        if (j < i) x[j] = v;
        else if (j == i) di = v;
      });
      for (int t = L_.row_ptr[i]; t < L_.row_ptr[i + 1]; ++t) {
        const int j = L_.col[t];
        const double lij = x[j] / L_.diag[j];
        x[j] = 0.0;
        // scatter: subtract lij * L_rj over column j entries with row in (j, i);
        // every such row is in this row's pattern by the fill lemma
        for (int c = col_ptr_[j]; c < col_ptr_[j + 1]; ++c) {
          const int r = col_row_[c];
          if (r >= i) break;
          x[r] -= lij * L_.val[col_val_pos_[c]];
        }
        di -= lij * lij;
        L_.val[t] = lij;
      }
      if (!(di > 0.0)) {
        const int pivot_1based = perm_[i] + 1;
        throw numerical_error("sparse Cholesky: non-positive pivot at vertex " +
                              std::to_string(pivot_1based) +
                              " (matrix is not positive definite)");
      }
      L_.diag[i] = std::sqrt(di);
    }
  }

  int k_ = 0;
  std::size_t analyzed_nnz_ = 0;
  std::vector<int> perm_, inv_perm_;
  SparseLowerTriangular L_;
  std::vector<int> col_ptr_, col_row_, col_val_pos_;
};

inline SparseLowerTriangular sparse_cholesky(const SparseSymmetric& q,
                                             EliminationOrder order = EliminationOrder::natural) {
  return SparseCholesky(q, order).factor();
}

// Permuted LDL^T of a (possibly singular) PSD matrix:
//   P Q P^T = (I - B)^T F (I - B),  B strictly lower triangular, F >= 0,
// realised by diagonal-pivoted elimination from the last position upward
// (largest remaining diagonal pivots first, so zero pivots gather at the
// top; their count is exactly k - rank).
struct LDLFactor {
  std::vector<int> perm;  // perm[pos] = original index at position pos
  Eigen::MatrixXd strictly_lower;  // B
  Eigen::VectorXd diag;            // F
  int rank = 0;

  Eigen::MatrixXd reconstruct() const {  // (I-B)^T F (I-B) = P Q P^T
    const Eigen::Index k = diag.size();
    const Eigen::MatrixXd l = Eigen::MatrixXd::Identity(k, k) - strictly_lower;
    return l.transpose() * diag.asDiagonal() * l;
  }
};

inline LDLFactor permuted_ldl_psd(const Eigen::MatrixXd& q, double tol = 1e-10) {
  const int k = static_cast<int>(q.rows());
  if (q.cols() != k || k < 1) throw validation_error("permuted_ldl_psd: matrix must be square");
  if (!q.isApprox(q.transpose(), 1e-12))
    throw validation_error("permuted_ldl_psd: matrix must be symmetric");
  Eigen::MatrixXd m = 0.5 * (q + q.transpose());
  double scale = 0.0;
  for (int i = 0; i < k; ++i) scale = std::max(scale, std::abs(m(i, i)));
  const double tol_abs = tol * std::max(scale, 1.0);

  LDLFactor out;
  out.perm.resize(k);
  std::iota(out.perm.begin(), out.perm.end(), 0);
  out.diag = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(k, k);  // unit upper in permuted frame

  for (int pos = k - 1; pos >= 0; --pos) {
    int jmax = 0;
    for (int j = 1; j <= pos; ++j)
      if (m(j, j) > m(jmax, jmax)) jmax = j;
    if (m(jmax, jmax) < -tol_abs)
      throw numerical_error("permuted_ldl_psd: negative diagonal " +
                            std::to_string(m(jmax, jmax)) + " , matrix is not PSD");
    if (jmax != pos) {
      m.row(jmax).swap(m.row(pos));
      m.col(jmax).swap(m.col(pos));
      std::swap(out.perm[jmax], out.perm[pos]);
      // previously computed multipliers live strictly right of pos
      if (pos + 1 < k) u.row(jmax).tail(k - pos - 1).swap(u.row(pos).tail(k - pos - 1));
    }
    const double d = m(pos, pos);
    if (d <= tol_abs) {
      // PSD implies the whole remaining block is numerically zero; anything
      // substantial left over means the input was not PSD
      double worst = 0.0;
      for (int a = 0; a <= pos; ++a)
        for (int b = 0; b <= pos; ++b) worst = std::max(worst, std::abs(m(a, b)));
      if (worst > std::sqrt(tol_abs * std::max(scale, 1.0)) + tol_abs)
        throw numerical_error("permuted_ldl_psd: zero pivot with residual block norm " +
                              std::to_string(worst) + " , matrix is not PSD");
      break;  // all remaining pivots are zero; F entries already 0
    }
    out.diag[pos] = d;
    ++out.rank;
    if (pos > 0) {
      const Eigen::VectorXd colv = m.col(pos).head(pos) / d;
      u.col(pos).head(pos) = colv;
      m.topLeftCorner(pos, pos).noalias() -= colv * m.col(pos).head(pos).transpose();
    }
  }
  out.strictly_lower = Eigen::MatrixXd::Identity(k, k) - u.transpose();
  return out;
}

// Draw one vector with precision scale * Q from the factored forms; the
// draw is a deterministic function of the rng state.
inline Eigen::VectorXd sample_mvn_precision(const SparseCholesky& chol, double scale_precision,
                                            Rng& rng) {
  detail::require(scale_precision > 0, "sample_mvn_precision: scale must be positive");
  Eigen::VectorXd z(chol.factor().k);
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return chol.solve_upper_unpermute(z) / std::sqrt(scale_precision);
}

// DAGAR factors sample by the forward recurrence in ordering sequence:
// w_i = b_i * sum_{j in N(i)} w_j + z_i / sqrt(tau_i).
inline Eigen::VectorXd sample_mvn_precision(const CholeskyPrecision& cp, double scale_precision,
                                            Rng& rng) {
  detail::require(scale_precision > 0, "sample_mvn_precision: scale must be positive");
  const int k = cp.k();
  Eigen::VectorXd w(k);
  const double root_scale = std::sqrt(scale_precision);
  for (int t = 0; t < k; ++t) {
    const int i = cp.ordering.pi[t];
    double mean = 0.0;
    if (cp.ordering.directed_counts[i] > 0) {
      double nb = 0.0;
      for (int j : cp.ordering.directed_neighbors[i]) nb += w[j];
      mean = cp.b[i] * nb;
    }
    w[i] = mean + rng.normal() / (std::sqrt(cp.tau[i]) * root_scale);
  }
  return w;
}

// Dense inverse through Cholesky; the test oracle for covariances, guarded
// against accidental huge inputs.
inline Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& q) {
  const int k = static_cast<int>(q.rows());
  if (k > 10000) throw validation_error("dense_inverse: dimension exceeds the 10^4 guard");
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success)
    throw numerical_error("dense_inverse: matrix is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(k, k));
}

inline double dense_logdet(const Eigen::MatrixXd& q) {
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success)
    throw numerical_error("dense_logdet: matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace dagar
