#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "plateid/morley.hpp"
#include "support.hpp"

namespace plateid {
namespace {

using Triangle = std::array<Point, 3>;

// Outward unit normals of the edges opposite each vertex of a CCW triangle.
std::array<Point, 3> outward_normals(const Triangle& v) {
  std::array<Point, 3> n;
  for (int j = 0; j < 3; ++j) {
    const Point a = v[(j + 1) % 3], b = v[(j + 2) % 3];
    const Point t = (b - a).normalized();
    n[j] = Point(t.y(), -t.x());
  }
  return n;
}

Point midpoint(const Triangle& v, int j) { return 0.5 * (v[(j + 1) % 3] + v[(j + 2) % 3]); }

const Triangle reference{Point(0, 0), Point(1, 0), Point(0, 1)};
const Triangle skewed{Point(0.013, 0.002), Point(0.021, 0.0045), Point(0.0105, 0.0118)};

// Symmetric 7-point rule, exact for polynomials of degree 5.
struct QuadraturePoint {
  std::array<double, 3> bary;
  double weight;
};
std::vector<QuadraturePoint> degree5_rule() {
  std::vector<QuadraturePoint> rule{{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.225}};
  const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
  const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
  for (int k = 0; k < 3; ++k) {
    std::array<double, 3> p1{b1, b1, b1}, p2{b2, b2, b2};
    p1[k] = a1;
    p2[k] = a2;
    rule.push_back({p1, w1});
    rule.push_back({p2, w2});
  }
  return rule;
}

Point at(const Triangle& v, const std::array<double, 3>& bary) {
  return bary[0] * v[0] + bary[1] * v[1] + bary[2] * v[2];
}

// DOFs of a smooth function: vertex values, then normal derivatives at the
// midpoints of the edges opposite vertices 0..2.
Vector6d dofs_of(const Triangle& v, const std::array<Point, 3>& normals,
                 const std::function<double(const Point&)>& f, const std::function<Point(const Point&)>& grad) {
  Vector6d d;
  for (int j = 0; j < 3; ++j) {
    d[j] = f(v[j]);
    d[3 + j] = grad(midpoint(v, j)).dot(normals[j]);
  }
  return d;
}

class MorleyTriangles : public ::testing::TestWithParam<Triangle> {};

TEST_P(MorleyTriangles, DegreesOfFreedomAreNodal) {
  const Triangle v = GetParam();
  const auto normals = outward_normals(v);
  const MorleyBasis basis(v, normals);
  Matrix6d nodal;  // row i: DOF i applied to every basis function
  for (int j = 0; j < 3; ++j) {
    nodal.row(j) = basis.values(v[j]).transpose();
    nodal.row(3 + j) = (basis.gradients(midpoint(v, j)) * normals[j]).transpose();
  }
  EXPECT_LT((nodal - Matrix6d::Identity()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_P(MorleyTriangles, ConstantsHavePartitionOfUnity) {
  const Triangle v = GetParam();
  const MorleyBasis basis(v, outward_normals(v));
  std::mt19937_64 rng(3);
  for (int s = 0; s < 10; ++s) {
    double l0 = testing::uniform(rng, 0, 1), l1 = testing::uniform(rng, 0, 1 - l0);
    const Point p = at(v, {l0, l1, 1 - l0 - l1});
    EXPECT_NEAR(basis.values(p).head<3>().sum(), 1.0, 1e-12);
  }
  const auto curv = basis.curvatures();
  const double scale = std::abs(curv[0].xx) + std::abs(curv[0].yy) + std::abs(curv[0].xy);
  EXPECT_NEAR(curv[0].xx + curv[1].xx + curv[2].xx, 0.0, 1e-10 * scale);
  EXPECT_NEAR(curv[0].yy + curv[1].yy + curv[2].yy, 0.0, 1e-10 * scale);
  EXPECT_NEAR(curv[0].xy + curv[1].xy + curv[2].xy, 0.0, 1e-10 * scale);
}

TEST_P(MorleyTriangles, ReproducesQuadratics) {
  const Triangle v = GetParam();
  const auto normals = outward_normals(v);
  const MorleyBasis basis(v, normals);
  const double s = 1.0 / (v[1] - v[0]).norm();
  auto q = [s](const Point& p) {
    const double x = s * p.x(), y = s * p.y();
    return 1.0 + 2.0 * x - y + 3.0 * x * x - x * y + 0.5 * y * y;
  };
  auto grad = [s](const Point& p) {
    const double x = s * p.x(), y = s * p.y();
    return Point(s * (2.0 + 6.0 * x - y), s * (-1.0 - x + y));
  };
  auto linear = [](const Point& p) { return p.x(); };
  auto linear_grad = [](const Point&) { return Point(1.0, 0.0); };
  const Vector6d dq = dofs_of(v, normals, q, grad);
  const Vector6d dl = dofs_of(v, normals, linear, linear_grad);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 10; ++k) {
    double l0 = testing::uniform(rng, 0, 1), l1 = testing::uniform(rng, 0, 1 - l0);
    const Point p = at(v, {l0, l1, 1 - l0 - l1});
    EXPECT_NEAR(basis.values(p).dot(dq), q(p), 1e-11);
    EXPECT_NEAR(basis.values(p).dot(dl), p.x(), 1e-13);
  }
  // Second derivatives of the quadratic: (6, 1, -1) s^2.
  const auto curv = basis.curvatures();
  double xx = 0, yy = 0, xy = 0;
  for (int i = 0; i < 6; ++i) {
    xx += dq[i] * curv[i].xx;
    yy += dq[i] * curv[i].yy;
    xy += dq[i] * curv[i].xy;
  }
  EXPECT_NEAR(xx, 6.0 * s * s, 1e-8 * s * s);
  EXPECT_NEAR(yy, 1.0 * s * s, 1e-8 * s * s);
  EXPECT_NEAR(xy, -1.0 * s * s, 1e-8 * s * s);
}

TEST_P(MorleyTriangles, MassAndRotaryMatchIndependentQuadrature) {
  const Triangle v = GetParam();
  const MorleyBasis basis(v, outward_normals(v));
  const ElementMatrices em = element_matrices(basis);
  const double area = std::abs(basis.area());
  Matrix6d mass = Matrix6d::Zero(), rotary = Matrix6d::Zero();
  Vector6d load = Vector6d::Zero();
  for (const auto& qp : degree5_rule()) {
    const Point p = at(v, qp.bary);
    const Vector6d h = basis.values(p);
    mass += qp.weight * area * h * h.transpose();
    load += qp.weight * area * h;
  }
  // Gradients are linear, so the edge-midpoint rule integrates their products exactly.
  for (int j = 0; j < 3; ++j) {
    const auto g = basis.gradients(midpoint(v, j));
    rotary += area / 3.0 * g * g.transpose();
  }
  EXPECT_LT((em.mass - mass).cwiseAbs().maxCoeff(), 1e-12 * mass.cwiseAbs().maxCoeff());
  EXPECT_LT((em.rotary - rotary).cwiseAbs().maxCoeff(), 1e-11 * rotary.cwiseAbs().maxCoeff());
  EXPECT_LT((em.load - load).cwiseAbs().maxCoeff(), 1e-12 * load.cwiseAbs().maxCoeff());

  Vector6d one = Vector6d::Zero();
  one.head<3>().setOnes();
  EXPECT_NEAR(one.dot(em.mass * one), area, 1e-12 * area);
  EXPECT_GT(em.mass.trace(), 0.0);
}

TEST_P(MorleyTriangles, BendingMatchesFiniteDifferenceCurvatures) {
  const Triangle v = GetParam();
  const MorleyBasis basis(v, outward_normals(v));
  const ElementMatrices em = element_matrices(basis);
  const double area = std::abs(basis.area());
  // Gradients are linear, so central differences of them give exact Hessians.
  const Point c = (v[0] + v[1] + v[2]) / 3.0;
  const double h = 1e-3 * (v[1] - v[0]).norm();
  const Eigen::Matrix<double, 6, 2> dx = (basis.gradients(c + Point(h, 0)) - basis.gradients(c - Point(h, 0))) / (2 * h);
  const Eigen::Matrix<double, 6, 2> dy = (basis.gradients(c + Point(0, h)) - basis.gradients(c - Point(0, h))) / (2 * h);
  std::array<Curvature, 6> curv;
  for (int i = 0; i < 6; ++i) curv[i] = {dx(i, 0), dy(i, 1), 0.5 * (dx(i, 1) + dy(i, 0))};

  for (int a = 0; a < num_moduli; ++a) {
    const auto alpha = static_cast<Modulus>(a);
    Matrix6d expected;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) expected(i, j) = area * bending_form(alpha, curv[j], curv[i]);
    const double scale = expected.cwiseAbs().maxCoeff();
    EXPECT_LT((em.bending[a] - expected).cwiseAbs().maxCoeff(), 1e-6 * scale) << modulus_names[a];
    EXPECT_LT((em.bending[a] - em.bending[a].transpose()).cwiseAbs().maxCoeff(), 1e-12 * scale)
        << modulus_names[a];
  }
}

TEST_P(MorleyTriangles, DiagonalBendingFormsArePositiveSemidefiniteOfRankOne) {
  const Triangle v = GetParam();
  const ElementMatrices em = element_matrices(MorleyBasis(v, outward_normals(v)));
  for (int a : {0, 3, 5}) {
    const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(em.bending[a]);
    const auto& ev = eig.eigenvalues();
    const double top = ev.maxCoeff();
    EXPECT_GT(ev.minCoeff(), -1e-12 * top) << modulus_names[a];
    int rank = 0;
    for (int i = 0; i < 6; ++i) rank += ev[i] > 1e-10 * top;
    // One curvature component per form: rank one on 6 DOFs.
    EXPECT_EQ(rank, 1) << modulus_names[a];
  }
  // The full isotropic energy sees all three curvature components.
  const Matrix6d iso = em.bending[0] + em.bending[3] + 0.3 * em.bending[1] + 0.7 * em.bending[5];
  const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(iso);
  int rank = 0;
  for (int i = 0; i < 6; ++i) rank += eig.eigenvalues()[i] > 1e-10 * eig.eigenvalues().maxCoeff();
  EXPECT_EQ(rank, 3);
}

TEST_P(MorleyTriangles, TwistFormOfXyIsTwiceTheArea) {
  const Triangle v = GetParam();
  const auto normals = outward_normals(v);
  const MorleyBasis basis(v, normals);
  const ElementMatrices em = element_matrices(basis);
  const Vector6d u = dofs_of(
      v, normals, [](const Point& p) { return p.x() * p.y(); }, [](const Point& p) { return Point(p.y(), p.x()); });
  EXPECT_NEAR(u.dot(em.bending[5] * u), 2.0 * std::abs(basis.area()), 1e-9 * std::abs(basis.area()));
}

INSTANTIATE_TEST_SUITE_P(Shapes, MorleyTriangles, ::testing::Values(reference, skewed));

TEST(MorleyBasis, ReferenceTriangleVertexValuesFormIdentity) {
  const MorleyBasis basis(reference, outward_normals(reference));
  Eigen::Matrix3d values;
  for (int j = 0; j < 3; ++j) values.row(j) = basis.values(reference[j]).head<3>().transpose();
  EXPECT_LT((values - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(MorleyBasis, DiagonalFormsTogetherSpanThreeCurvatureStates) {
  // k^11 pairs u_xx only: rank one. Summing the three diagonal forms gives
  // the three independent constant-curvature states.
  const ElementMatrices em = element_matrices(MorleyBasis(reference, outward_normals(reference)));
  const Matrix6d sum = em.bending[0] + em.bending[3] + em.bending[5];
  const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(sum);
  int rank = 0;
  for (int i = 0; i < 6; ++i) rank += eig.eigenvalues()[i] > 1e-10 * eig.eigenvalues().maxCoeff();
  EXPECT_EQ(rank, 3);
}

TEST(MorleyBasis, DegenerateTriangleIsRejected) {
  const Triangle flat{Point(0, 0), Point(1, 0), Point(2, 0)};
  EXPECT_THROW(MorleyBasis(flat, outward_normals(reference)), MeshError);
}

TEST(MorleyBasis, MeshElementsUseSharedEdgeNormals) {
  const Mesh mesh = generate_strip_mesh(GeometryConfig{});
  for (std::size_t t = 0; t < mesh.num_triangles(); t += 101) {
    const MorleyBasis basis = element_basis(mesh, t);
    for (int j = 0; j < 3; ++j) {
      const Edge& e = mesh.edges[static_cast<std::size_t>(mesh.triangle_edges[t][j])];
      EXPECT_LT((basis.normals()[j] - e.normal).norm(), 1e-15);
    }
  }
}

}  // namespace
}  // namespace plateid
