#pragma once

#include <array>

#include <Eigen/Core>

#include "plateid/mesh.hpp"

namespace plateid {

/// Elastic modulus index pairs, in the order 11, 12, 16, 22, 26, 66.
enum class Modulus : int { d11 = 0, d12, d16, d22, d26, d66 };
inline constexpr int num_moduli = 6;
inline constexpr std::array<const char*, num_moduli> modulus_names{"11", "12", "16", "22", "26", "66"};

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Hessian components (xx, yy, xy) of a quadratic function.
struct Curvature {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
};

/// Bending bilinear form of one modulus, evaluated on constant curvatures.
/// The shear-coupling forms (16, 26) are the symmetric parts of the raw
/// moment-curvature pairing, so every form is symmetric in (u, v).
double bending_form(Modulus alpha, const Curvature& u, const Curvature& v);

/// Quadratic shape functions of a Morley triangle.
///
/// Degrees of freedom 0..2 are vertex values, 3..5 are normal derivatives at
/// the midpoint of the edge opposite vertex 0..2, taken along the supplied edge
/// normals. Each basis function is stored as monomial coefficients in
/// centroid-shifted, scaled coordinates.
class MorleyBasis {
public:
  MorleyBasis(const std::array<Point, 3>& vertices, const std::array<Point, 3>& edge_normals);

  double area() const { return area_; }
  const std::array<Point, 3>& vertices() const { return vertices_; }
  const std::array<Point, 3>& normals() const { return normals_; }

  Vector6d values(const Point& p) const;
  /// Row i holds (d/dx, d/dy) of basis function i.
  Eigen::Matrix<double, 6, 2> gradients(const Point& p) const;
  std::array<Curvature, 6> curvatures() const;

private:
  Eigen::Matrix<double, 6, 1> monomials(const Point& p) const;

  std::array<Point, 3> vertices_;
  std::array<Point, 3> normals_;
  Point center_;
  double scale_ = 1.0;
  double area_ = 0.0;
  Matrix6d coefficients_;  // column i: basis function i
};

struct ElementMatrices {
  Matrix6d mass;                           // int h_i h_j
  Matrix6d rotary;                         // int grad h_i . grad h_j
  std::array<Matrix6d, num_moduli> bending;  // int V^alpha(h_i, h_j)
  Vector6d load;                           // int h_j
};

ElementMatrices element_matrices(const MorleyBasis& basis);

/// Basis for triangle `t` of a mesh using the mesh's edge normals.
MorleyBasis element_basis(const Mesh& mesh, std::size_t t);

}  // namespace plateid
