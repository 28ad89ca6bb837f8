#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace plateid {

/// Sparse LDL^T factorization of a symmetric (not Hermitian) matrix without
/// pivoting, using an AMD fill-reducing ordering.
///
/// The symbolic phase depends only on the sparsity pattern, so it is computed
/// once by `analyze` and reused by every `factorize` call on matrices with the
/// same compressed pattern. Only the upper triangle of the input is read.
template <typename Scalar>
class SparseLDLT {
public:
  using Matrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  void analyze(const Matrix& a);
  /// Returns false if a zero pivot is met; the factor is then unusable.
  bool factorize(const Matrix& a);
  Vector solve(const Vector& b) const;
  DenseMatrix solve(const DenseMatrix& b) const;

  bool analyzed() const { return n_ >= 0; }
  Eigen::Index rows() const { return n_; }
  Eigen::Index factor_nonzeros() const { return lp_.empty() ? 0 : lp_.back(); }
  /// min |d_k| / max |d_k| of the last factorization.
  double pivot_ratio() const { return pivot_ratio_; }

private:
  void solve_in_place(Scalar* x) const;

  Eigen::Index n_ = -1;
  Eigen::Index source_nnz_ = 0;
  std::vector<int> perm_;      // new index -> old index
  std::vector<int> cp_, ci_;   // upper triangle of the permuted matrix, by column
  std::vector<int> source_;    // position in the input value array per (cp_, ci_) entry
  std::vector<int> parent_;
  std::vector<int> lp_;
  std::vector<int> li_;
  // Row k of L: columns rj_[rp_[k]..rp_[k+1]) in elimination order, with the
  // position of each entry in (li_, lx_) at rslot_.
  std::vector<int> rp_, rj_, rslot_;
  std::vector<Scalar> work_;
  std::vector<Scalar> lx_;
  std::vector<Scalar> d_;
  std::vector<Scalar> dinv_;  // 1 / d_
  double pivot_ratio_ = 0.0;
};

extern template class SparseLDLT<double>;
extern template class SparseLDLT<std::complex<double>>;

}  // namespace plateid
