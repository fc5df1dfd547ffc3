#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dagar/errors.hpp"

namespace dagar {

// Sparse symmetric matrix. Only the upper triangle (diagonal included) is
// stored, in CSR layout with sorted column indices; the lower triangle is
// mirrored through a transpose index built at construction. Immutable.
class SparseSymmetric {
 public:
  SparseSymmetric() = default;

  // Entries may repeat (they are accumulated) and may lie in either
  // triangle; the diagonal is made structurally present for every row.
  SparseSymmetric(int k, std::vector<std::tuple<int, int, double>> entries) : k_(k) {
    if (k < 1) throw validation_error("sparse matrix dimension must be at least 1");
    for (auto& [i, j, v] : entries) {
      if (i < 0 || i >= k || j < 0 || j >= k)
        throw validation_error("sparse entry index out of range");
      if (!std::isfinite(v)) throw validation_error("sparse entry is not finite");
      if (i > j) std::swap(i, j);
    }
    for (int i = 0; i < k; ++i) entries.emplace_back(i, i, 0.0);
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) {
                return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) < std::get<0>(b)
                                                        : std::get<1>(a) < std::get<1>(b);
              });
    row_ptr_.assign(k + 1, 0);
    for (std::size_t t = 0; t < entries.size();) {
      const int i = std::get<0>(entries[t]);
      const int j = std::get<1>(entries[t]);
      double v = 0.0;
      while (t < entries.size() && std::get<0>(entries[t]) == i && std::get<1>(entries[t]) == j)
        v += std::get<2>(entries[t++]);
      col_.push_back(j);
      val_.push_back(v);
      ++row_ptr_[i + 1];
    }
    for (int i = 0; i < k; ++i) row_ptr_[i + 1] += row_ptr_[i];
    build_transpose_index();
  }

  int dim() const { return k_; }
  // Stored entries: upper triangle plus diagonal.
  std::size_t nnz_stored() const { return col_.size(); }

  // Iteration over stored (upper) entries of one row.
  struct EntryRange {
    const int* col_begin; const int* col_end; const double* val_begin;
  };
  EntryRange upper_row(int i) const {
    return {col_.data() + row_ptr_[i], col_.data() + row_ptr_[i + 1], val_.data() + row_ptr_[i]};
  }

  double diagonal(int i) const {
    // the diagonal is always the first stored entry of its row
    return val_[row_ptr_[i]];
  }

  double at(int i, int j) const {
    if (i > j) std::swap(i, j);
    const int* b = col_.data() + row_ptr_[i];
    const int* e = col_.data() + row_ptr_[i + 1];
    const int* p = std::lower_bound(b, e, j);
    if (p != e && *p == j) return val_[row_ptr_[i] + (p - b)];
    return 0.0;
  }

  // Full row i as (column, value) pairs, mirrored across the diagonal.
  // Columns ascend; the strictly-lower part comes from the transpose index.
  template <class Fn>
  void for_each_in_row(int i, Fn&& fn) const {
    for (const auto& [j, t] : lower_[i]) fn(j, val_[t]);
    for (int t = row_ptr_[i]; t < row_ptr_[i + 1]; ++t) fn(col_[t], val_[t]);
  }

  // y = A x, exploiting symmetry over stored entries.
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    check_length(x.size());
    Eigen::VectorXd y = Eigen::VectorXd::Zero(k_);
    for (int i = 0; i < k_; ++i)
      for (int t = row_ptr_[i]; t < row_ptr_[i + 1]; ++t) {
        const int j = col_[t];
        const double v = val_[t];
        y[i] += v * x[j];
        if (j != i) y[j] += v * x[i];
      }
    return y;
  }

  double quad_form(const Eigen::VectorXd& x) const {
    check_length(x.size());
    double s = 0.0;
    for (int i = 0; i < k_; ++i)
      for (int t = row_ptr_[i]; t < row_ptr_[i + 1]; ++t) {
        const int j = col_[t];
        s += (j == i ? 1.0 : 2.0) * val_[t] * x[i] * x[j];
      }
    return s;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k_, k_);
    for (int i = 0; i < k_; ++i)
      for (int t = row_ptr_[i]; t < row_ptr_[i + 1]; ++t) {
        m(i, col_[t]) = val_[t];
        m(col_[t], i) = val_[t];
      }
    return m;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (int i = 0; i < k_; ++i)
      for (int t = row_ptr_[i]; t < row_ptr_[i + 1]; ++t)
        s += (col_[t] == i ? 1.0 : 2.0) * val_[t] * val_[t];
    return std::sqrt(s);
  }

  // Frobenius norm of the difference of two symmetric matrices with
  // possibly different patterns.
  static double frobenius_distance(const SparseSymmetric& a, const SparseSymmetric& b) {
    if (a.dim() != b.dim())
      throw validation_error("frobenius_distance: dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
      const int *pa = a.col_.data() + a.row_ptr_[i], *ea = a.col_.data() + a.row_ptr_[i + 1];
      const int *pb = b.col_.data() + b.row_ptr_[i], *eb = b.col_.data() + b.row_ptr_[i + 1];
      const double *va = a.val_.data() + a.row_ptr_[i], *vb = b.val_.data() + b.row_ptr_[i];
      while (pa != ea || pb != eb) {
        int ja = pa != ea ? *pa : a.dim();
        int jb = pb != eb ? *pb : a.dim();
        double d;
        int j;
        if (ja == jb) { d = *va - *vb; j = ja; ++pa; ++va; ++pb; ++vb; }
        else if (ja < jb) { d = *va; j = ja; ++pa; ++va; }
        else { d = -*vb; j = jb; ++pb; ++vb; }
        s += (j == i ? 1.0 : 2.0) * d * d;
      }
    }
    return std::sqrt(s);
  }

  // Same pattern, values scaled by alpha, then beta_i added to the diagonal.
  SparseSymmetric scaled_plus_diagonal(double alpha, const Eigen::VectorXd& beta) const {
    check_length(beta.size());
    SparseSymmetric out;
    out.k_ = k_;
    out.row_ptr_ = row_ptr_;
    out.col_ = col_;
    out.val_.resize(val_.size());
    for (std::size_t t = 0; t < val_.size(); ++t) out.val_[t] = alpha * val_[t];
    for (int i = 0; i < k_; ++i) out.val_[row_ptr_[i]] += beta[i];
    out.lower_ = lower_;
    return out;
  }

  // Pattern-preserving value replacement; the caller supplies new values in
  // stored order (used by builders that refresh a matrix at a new rho).
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& columns() const { return col_; }
  const std::vector<double>& values() const { return val_; }
  std::vector<double>& mutable_values() { return val_; }

 private:
  void check_length(Eigen::Index n) const {
    if (n != k_)
      throw validation_error("vector length " + std::to_string(n) +
                             " does not match matrix dimension " + std::to_string(k_));
  }

  void build_transpose_index() {
    lower_.assign(k_, {});
    for (int i = 0; i < k_; ++i)
      for (int t = row_ptr_[i]; t < row_ptr_[i + 1]; ++t)
        if (col_[t] != i) lower_[col_[t]].emplace_back(i, t);
    // pairs arrive with ascending row index i, which is the column order
    // wanted for mirrored access
  }

  int k_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_;
  std::vector<double> val_;
  std::vector<std::vector<std::pair<int, int>>> lower_;  // (j, value index) with j < i
};

}  // namespace dagar
