#include "plateid/morley.hpp"

#include <cmath>

#include <Eigen/LU>

namespace plateid {

namespace {

// Symmetric 6-point rule, exact for polynomials of degree 4 on triangles.
struct QuadraturePoint {
  double l0, l1, l2, weight;
};

constexpr double qa = 0.445948490915965;
constexpr double qb = 0.091576213509771;
constexpr double wa = 0.223381589678011;
constexpr double wb = 0.109951743655322;

constexpr std::array<QuadraturePoint, 6> degree4_rule{{
    {qa, qa, 1.0 - 2.0 * qa, wa},
    {qa, 1.0 - 2.0 * qa, qa, wa},
    {1.0 - 2.0 * qa, qa, qa, wa},
    {qb, qb, 1.0 - 2.0 * qb, wb},
    {qb, 1.0 - 2.0 * qb, qb, wb},
    {1.0 - 2.0 * qb, qb, qb, wb},
}};

}  // namespace

double bending_form(Modulus alpha, const Curvature& u, const Curvature& v) {
  switch (alpha) {
    case Modulus::d11: return u.xx * v.xx;
    case Modulus::d12: return u.yy * v.xx + u.xx * v.yy;
    case Modulus::d16: return 1.5 * (u.xy * v.xx + u.xx * v.xy);
    case Modulus::d22: return u.yy * v.yy;
    case Modulus::d26: return 1.5 * (u.xy * v.yy + u.yy * v.xy);
    case Modulus::d66: return 2.0 * u.xy * v.xy;
  }
  return 0.0;
}

MorleyBasis::MorleyBasis(const std::array<Point, 3>& vertices, const std::array<Point, 3>& edge_normals)
    : vertices_(vertices), normals_(edge_normals) {
  const Point e1 = vertices[1] - vertices[0];
  const Point e2 = vertices[2] - vertices[0];
  area_ = 0.5 * (e1.x() * e2.y() - e2.x() * e1.y());
  const double diameter = std::max({e1.norm(), e2.norm(), (vertices[2] - vertices[1]).norm()});
  if (!(diameter > 0.0) || !(std::abs(area_) > 1e-14 * diameter * diameter))
    throw MeshError("degenerate triangle in Morley basis");
  center_ = (vertices[0] + vertices[1] + vertices[2]) / 3.0;
  scale_ = diameter;

  // Rows: degrees of freedom applied to the monomials
  // 1, s, t, s^2, s t, t^2 with s = (x - xc)/scale, t = (y - yc)/scale.
  Matrix6d dof;
  for (int i = 0; i < 3; ++i) dof.row(i) = monomials(vertices[i]).transpose();
  for (int j = 0; j < 3; ++j) {
    const Point mid = 0.5 * (vertices[(j + 1) % 3] + vertices[(j + 2) % 3]);
    const double s = (mid.x() - center_.x()) / scale_;
    const double t = (mid.y() - center_.y()) / scale_;
    const double nx = normals_[j].x() / scale_;
    const double ny = normals_[j].y() / scale_;
    dof.row(3 + j) << 0.0, nx, ny, 2.0 * s * nx, t * nx + s * ny, 2.0 * t * ny;
  }
  Eigen::FullPivLU<Matrix6d> lu(dof);
  if (!lu.isInvertible()) throw MeshError("Morley degrees of freedom are not unisolvent on triangle");
  coefficients_ = lu.inverse();
}

Eigen::Matrix<double, 6, 1> MorleyBasis::monomials(const Point& p) const {
  const double s = (p.x() - center_.x()) / scale_;
  const double t = (p.y() - center_.y()) / scale_;
  Eigen::Matrix<double, 6, 1> m;
  m << 1.0, s, t, s * s, s * t, t * t;
  return m;
}

Vector6d MorleyBasis::values(const Point& p) const {
  return coefficients_.transpose() * monomials(p);
}

Eigen::Matrix<double, 6, 2> MorleyBasis::gradients(const Point& p) const {
  const double s = (p.x() - center_.x()) / scale_;
  const double t = (p.y() - center_.y()) / scale_;
  Eigen::Matrix<double, 6, 2> dm;
  dm << 0.0, 0.0,
        1.0, 0.0,
        0.0, 1.0,
        2.0 * s, 0.0,
        t, s,
        0.0, 2.0 * t;
  return coefficients_.transpose() * dm / scale_;
}

std::array<Curvature, 6> MorleyBasis::curvatures() const {
  const double inv2 = 1.0 / (scale_ * scale_);
  std::array<Curvature, 6> out;
  for (int i = 0; i < 6; ++i) {
    out[i].xx = 2.0 * coefficients_(3, i) * inv2;
    out[i].xy = coefficients_(4, i) * inv2;
    out[i].yy = 2.0 * coefficients_(5, i) * inv2;
  }
  return out;
}

ElementMatrices element_matrices(const MorleyBasis& basis) {
  ElementMatrices em;
  em.mass.setZero();
  em.rotary.setZero();
  em.load.setZero();
  const auto& v = basis.vertices();
  const double area = std::abs(basis.area());
  for (const auto& q : degree4_rule) {
    const Point p = q.l0 * v[0] + q.l1 * v[1] + q.l2 * v[2];
    const Vector6d h = basis.values(p);
    const auto grad = basis.gradients(p);
    const double w = q.weight * area;
    em.mass.noalias() += w * h * h.transpose();
    em.rotary.noalias() += w * grad * grad.transpose();
    em.load.noalias() += w * h;
  }
  em.mass = 0.5 * (em.mass + em.mass.transpose()).eval();
  em.rotary = 0.5 * (em.rotary + em.rotary.transpose()).eval();

  const auto curv = basis.curvatures();
  for (int a = 0; a < num_moduli; ++a) {
    Matrix6d& k = em.bending[a];
    for (int i = 0; i < 6; ++i)
      for (int j = i; j < 6; ++j) {
        k(i, j) = area * bending_form(static_cast<Modulus>(a), curv[i], curv[j]);
        k(j, i) = k(i, j);
      }
  }
  return em;
}

MorleyBasis element_basis(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const auto& te = mesh.triangle_edges[t];
  return MorleyBasis({mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]},
                     {mesh.edges[te[0]].normal, mesh.edges[te[1]].normal, mesh.edges[te[2]].normal});
}

}  // namespace plateid
