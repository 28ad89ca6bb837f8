#include <complex>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "plateid/forward.hpp"
#include "plateid/sparse_ldlt.hpp"
#include "support.hpp"

namespace plateid {
namespace {

using ComplexLDLT = SparseLDLT<Complex>;
using ComplexDense = Eigen::MatrixXcd;

// Random symmetric (not Hermitian) matrix with a banded-plus-scatter pattern
// and a dominant complex diagonal.
ComplexSparse random_symmetric(int n, std::uint64_t seed, double shift = 4.0) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Triplet<Complex>> t;
  auto draw = [&] { return Complex(testing::uniform(rng, -1, 1), testing::uniform(rng, -1, 1)); };
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, Complex(shift, 0.5) + draw());
    for (int j : {i + 1, i + 7, (i * 13 + 5) % n}) {
      if (j <= i || j >= n) continue;
      const Complex v = draw();
      t.emplace_back(i, j, v);
      t.emplace_back(j, i, v);
    }
  }
  ComplexSparse a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

TEST(SparseLDLT, SolvesLikeDenseLU) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const ComplexSparse a = random_symmetric(120, seed);
    ComplexLDLT ldlt;
    ldlt.analyze(a);
    ASSERT_TRUE(ldlt.factorize(a));
    std::mt19937_64 rng(seed + 100);
    Eigen::VectorXcd b(120);
    for (auto& v : b) v = Complex(testing::uniform(rng, -1, 1), testing::uniform(rng, -1, 1));
    const Eigen::VectorXcd x = ldlt.solve(b);
    const Eigen::VectorXcd oracle = ComplexDense(a).partialPivLu().solve(b);
    EXPECT_LT((x - oracle).norm() / oracle.norm(), 1e-12);
    EXPECT_LT((a * x - b).norm() / b.norm(), 1e-13);
  }
}

TEST(SparseLDLT, MultipleRightHandSides) {
  const ComplexSparse a = random_symmetric(80, 7);
  ComplexLDLT ldlt;
  ldlt.analyze(a);
  ASSERT_TRUE(ldlt.factorize(a));
  const ComplexDense b = ComplexDense::Random(80, 4);
  const ComplexDense x = ldlt.solve(b);
  EXPECT_LT((ComplexDense(a) * x - b).norm() / b.norm(), 1e-13);
}

TEST(SparseLDLT, RefactorizationReusesSymbolicAnalysis) {
  const ComplexSparse a = random_symmetric(100, 11);
  // Same pattern, new values; symmetric because the scale depends on i + j.
  ComplexSparse b = a;
  for (int col = 0; col < b.outerSize(); ++col)
    for (ComplexSparse::InnerIterator it(b, col); it; ++it)
      it.valueRef() = a.coeff(it.row(), it.col()) * Complex(1.0, 0.05 * ((it.row() + it.col()) % 4));
  ComplexLDLT reused;
  reused.analyze(a);
  ASSERT_TRUE(reused.factorize(a));
  ASSERT_TRUE(reused.factorize(b));
  ComplexLDLT fresh;
  fresh.analyze(b);
  ASSERT_TRUE(fresh.factorize(b));
  const Eigen::VectorXcd rhs = Eigen::VectorXcd::Ones(100);
  const Eigen::VectorXcd x1 = reused.solve(rhs), x2 = fresh.solve(rhs);
  EXPECT_LT((x1 - x2).norm() / x2.norm(), 1e-14);
}

TEST(SparseLDLT, RealMatricesWork) {
  const int n = 60;
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 4.0);
    if (i + 1 < n) {
      t.emplace_back(i, i + 1, -1.0);
      t.emplace_back(i + 1, i, -1.0);
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  SparseLDLT<double> ldlt;
  ldlt.analyze(a);
  ASSERT_TRUE(ldlt.factorize(a));
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
  const Eigen::VectorXd x = ldlt.solve(b);
  EXPECT_LT((a * x - b).norm(), 1e-13);
  EXPECT_GT(ldlt.pivot_ratio(), 0.0);
  EXPECT_LE(ldlt.pivot_ratio(), 1.0);
}

TEST(SparseLDLT, ZeroPivotIsReported) {
  SparseMatrix a(2, 2);
  a.insert(0, 1) = 1.0;
  a.insert(1, 0) = 1.0;
  a.makeCompressed();
  SparseLDLT<double> ldlt;
  ldlt.analyze(a);
  EXPECT_FALSE(ldlt.factorize(a));
}

TEST(SparseLDLT, PlateSystemMatchesDenseLU) {
  const ConstantOperators& ops = testing::table_operators();
  const SystemBuilder builder(ops);
  const double omega = 2.0 * 3.141592653589793 * 600.0;
  const ComplexModuli moduli = testing::table_material().complex_moduli();
  const ComplexSparse k = builder.matrix(omega, moduli);
  const Eigen::VectorXcd f = builder.rhs(omega);
  ComplexLDLT ldlt;
  ldlt.analyze(k);
  ASSERT_TRUE(ldlt.factorize(k));
  const Eigen::VectorXcd x = ldlt.solve(f);
  const Eigen::VectorXcd oracle = ComplexDense(k).partialPivLu().solve(f);
  EXPECT_LT((x - oracle).norm() / oracle.norm(), 1e-8);
}

}  // namespace
}  // namespace plateid
