#include "plateid/sparse_ldlt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/OrderingMethods>

namespace plateid {

template <typename Scalar>
void SparseLDLT<Scalar>::analyze(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("SparseLDLT: matrix must be square");
  if (!a.isCompressed()) throw std::invalid_argument("SparseLDLT: matrix must be compressed");
  const Eigen::Index n = a.rows();
  n_ = n;
  source_nnz_ = a.nonZeros();

  // Pattern carrying value positions, so the permutation can be tracked.
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> positions(n, n);
  {
    std::vector<Eigen::Triplet<double, int>> triplets;
    triplets.reserve(static_cast<std::size_t>(a.nonZeros()));
    for (int col = 0; col < a.outerSize(); ++col)
      for (int p = a.outerIndexPtr()[col]; p < a.outerIndexPtr()[col + 1]; ++p)
        triplets.emplace_back(a.innerIndexPtr()[p], col, static_cast<double>(p + 1));
    positions.setFromTriplets(triplets.begin(), triplets.end());
  }

  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
  Eigen::AMDOrdering<int> ordering;
  ordering(positions, pinv);
  // The ordering is returned as new -> old.
  perm_.assign(static_cast<std::size_t>(n), 0);
  std::vector<int> to_new(static_cast<std::size_t>(n), 0);
  for (Eigen::Index k = 0; k < n; ++k) {
    perm_[static_cast<std::size_t>(k)] = pinv.indices()[k];
    to_new[static_cast<std::size_t>(pinv.indices()[k])] = static_cast<int>(k);
  }

  // Upper triangle of C = P A P^T, column by column.
  std::vector<std::vector<std::pair<int, int>>> columns(static_cast<std::size_t>(n));
  for (int col = 0; col < positions.outerSize(); ++col) {
    const int new_col = to_new[static_cast<std::size_t>(col)];
    for (decltype(positions)::InnerIterator it(positions, col); it; ++it) {
      const int new_row = to_new[static_cast<std::size_t>(it.row())];
      if (new_row <= new_col)
        columns[static_cast<std::size_t>(new_col)].emplace_back(new_row, static_cast<int>(it.value()) - 1);
    }
  }
  cp_.assign(static_cast<std::size_t>(n) + 1, 0);
  ci_.clear();
  source_.clear();
  for (Eigen::Index k = 0; k < n; ++k) {
    auto& col = columns[static_cast<std::size_t>(k)];
    std::sort(col.begin(), col.end());
    for (const auto& [row, src] : col) {
      ci_.push_back(row);
      source_.push_back(src);
    }
    cp_[static_cast<std::size_t>(k) + 1] = static_cast<int>(ci_.size());
  }

  // Elimination tree and column counts of L.
  parent_.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> flag(static_cast<std::size_t>(n), -1);
  std::vector<int> lnz(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    flag[k] = k;
    for (int p = cp_[k]; p < cp_[k + 1]; ++p) {
      int i = ci_[p];
      if (i >= k) continue;
      for (; flag[i] != k; i = parent_[i]) {
        if (parent_[i] == -1) parent_[i] = k;
        ++lnz[i];
        flag[i] = k;
      }
    }
  }
  lp_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int k = 0; k < n; ++k) lp_[k + 1] = lp_[k] + lnz[k];
  li_.assign(static_cast<std::size_t>(lp_.back()), 0);

  // Row patterns of L in topological order, which the numeric phase replays.
  rp_.assign(static_cast<std::size_t>(n) + 1, 0);
  rj_.clear();
  rslot_.clear();
  rj_.reserve(li_.size());
  rslot_.reserve(li_.size());
  std::fill(flag.begin(), flag.end(), -1);
  std::vector<int> fill(static_cast<std::size_t>(n), 0);
  std::vector<int> pattern(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    int top = n;
    flag[k] = k;
    for (int p = cp_[k]; p < cp_[k + 1]; ++p) {
      int i = ci_[p];
      int len = 0;
      for (; flag[i] != k; i = parent_[i]) {
        pattern[len++] = i;
        flag[i] = k;
      }
      while (len > 0) pattern[--top] = pattern[--len];
    }
    for (; top < n; ++top) {
      const int i = pattern[top];
      const int slot = lp_[i] + fill[i]++;
      li_[slot] = k;
      rj_.push_back(i);
      rslot_.push_back(slot);
    }
    rp_[k + 1] = static_cast<int>(rj_.size());
  }
  lx_.assign(static_cast<std::size_t>(lp_.back()), Scalar(0));
  d_.assign(static_cast<std::size_t>(n), Scalar(0));
  dinv_.assign(static_cast<std::size_t>(n), Scalar(0));
  work_.assign(static_cast<std::size_t>(n), Scalar(0));
}

template <typename Scalar>
bool SparseLDLT<Scalar>::factorize(const Matrix& a) {
  if (!analyzed()) analyze(a);
  if (a.rows() != n_ || a.nonZeros() != source_nnz_)
    throw std::invalid_argument("SparseLDLT: matrix pattern differs from the analyzed one");

  const int n = static_cast<int>(n_);
  const Scalar* values = a.valuePtr();
  Scalar* y = work_.data();  // zero on entry and exit of every column
  const int* li = li_.data();
  Scalar* lx = lx_.data();
  double dmin = INFINITY, dmax = 0.0;

  for (int k = 0; k < n; ++k) {
    for (int p = cp_[k]; p < cp_[k + 1]; ++p) y[ci_[p]] += values[source_[p]];
    Scalar dk = y[k];
    y[k] = Scalar(0);
    for (int q = rp_[k]; q < rp_[k + 1]; ++q) {
      const int i = rj_[q];
      const int slot = rslot_[q];
      const Scalar yi = y[i];
      y[i] = Scalar(0);
      for (int p = lp_[i]; p < slot; ++p) y[li[p]] -= lx[p] * yi;
      const Scalar lki = yi * dinv_[i];
      dk -= lki * yi;
      lx[slot] = lki;
    }
    const double mag = std::abs(dk);
    if (!(mag > 0.0) || !std::isfinite(mag)) {
      std::fill(work_.begin(), work_.end(), Scalar(0));
      pivot_ratio_ = 0.0;
      return false;
    }
    dmin = std::min(dmin, mag);
    dmax = std::max(dmax, mag);
    d_[k] = dk;
    dinv_[k] = Scalar(1) / dk;
  }
  pivot_ratio_ = n > 0 ? dmin / dmax : 1.0;
  return true;
}

template <typename Scalar>
void SparseLDLT<Scalar>::solve_in_place(Scalar* x) const {
  const int n = static_cast<int>(n_);
  for (int j = 0; j < n; ++j) {
    const Scalar xj = x[j];
    for (int p = lp_[j]; p < lp_[j + 1]; ++p) x[li_[p]] -= lx_[p] * xj;
  }
  for (int j = 0; j < n; ++j) x[j] *= dinv_[j];
  for (int j = n - 1; j >= 0; --j) {
    Scalar acc = x[j];
    for (int p = lp_[j]; p < lp_[j + 1]; ++p) acc -= lx_[p] * x[li_[p]];
    x[j] = acc;
  }
}

template <typename Scalar>
typename SparseLDLT<Scalar>::Vector SparseLDLT<Scalar>::solve(const Vector& b) const {
  if (b.size() != n_) throw std::invalid_argument("SparseLDLT: right-hand side size mismatch");
  Vector work(n_);
  for (Eigen::Index k = 0; k < n_; ++k) work[k] = b[perm_[static_cast<std::size_t>(k)]];
  solve_in_place(work.data());
  Vector x(n_);
  for (Eigen::Index k = 0; k < n_; ++k) x[perm_[static_cast<std::size_t>(k)]] = work[k];
  return x;
}

template <typename Scalar>
typename SparseLDLT<Scalar>::DenseMatrix SparseLDLT<Scalar>::solve(const DenseMatrix& b) const {
  DenseMatrix x(b.rows(), b.cols());
  for (Eigen::Index c = 0; c < b.cols(); ++c) x.col(c) = solve(Vector(b.col(c)));
  return x;
}

template class SparseLDLT<double>;
template class SparseLDLT<std::complex<double>>;

}  // namespace plateid
