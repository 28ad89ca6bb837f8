#include "plateid/assembly.hpp"

#include <fstream>
#include <stdexcept>

namespace plateid {

namespace {

using Triplet = Eigen::Triplet<double, int>;

SparseMatrix from_triplets(std::size_t rows, std::size_t cols, const std::vector<Triplet>& triplets) {
  SparseMatrix m(static_cast<int>(rows), static_cast<int>(cols));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

std::array<Index, 6> element_dofs(const Mesh& mesh, const DofMap& dofs, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const auto& te = mesh.triangle_edges[t];
  return {dofs.node_dof(tri[0]), dofs.node_dof(tri[1]), dofs.node_dof(tri[2]),
          dofs.edge_dof(te[0]),  dofs.edge_dof(te[1]),  dofs.edge_dof(te[2])};
}

// Splits a full matrix into its free-free block and the lift vector
// -A_{I,D} g.
void restrict(const SparseMatrix& full, const DofMap& dofs, SparseMatrix& block, Eigen::VectorXd& lift) {
  std::vector<Index> to_constrained(dofs.size(), -1);
  for (std::size_t k = 0; k < dofs.constrained.size(); ++k) to_constrained[dofs.constrained[k]] = static_cast<Index>(k);

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(full.nonZeros()));
  lift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.num_free()));
  for (int col = 0; col < full.outerSize(); ++col) {
    const Index fc = dofs.to_free[col];
    const Index cc = to_constrained[col];
    for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
      const Index fr = dofs.to_free[it.row()];
      if (fr < 0) continue;
      if (fc >= 0)
        triplets.emplace_back(fr, fc, it.value());
      else
        lift[fr] -= it.value() * dofs.lift_values[cc];
    }
  }
  block = from_triplets(dofs.num_free(), dofs.num_free(), triplets);
}

}  // namespace

DofMap make_dof_map(const Mesh& mesh) {
  DofMap dofs;
  dofs.num_nodes = mesh.num_nodes();
  dofs.num_edges = mesh.num_edges();
  std::vector<char> constrained(dofs.size(), 0);
  for (Index n : mesh.clamped_nodes()) constrained[dofs.node_dof(n)] = 1;
  for (Index e : mesh.clamped_edges) constrained[dofs.edge_dof(e)] = 2;

  dofs.to_free.assign(dofs.size(), -1);
  std::vector<double> lift;
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    if (constrained[k]) {
      dofs.constrained.push_back(static_cast<Index>(k));
      lift.push_back(constrained[k] == 1 ? 1.0 : 0.0);
    } else {
      dofs.to_free[k] = static_cast<Index>(dofs.free.size());
      dofs.free.push_back(static_cast<Index>(k));
    }
  }
  dofs.lift_values = Eigen::Map<Eigen::VectorXd>(lift.data(), static_cast<Eigen::Index>(lift.size()));
  return dofs;
}

FullOperators assemble_full(const Mesh& mesh) {
  const DofMap dofs = make_dof_map(mesh);
  const std::size_t n = dofs.size();
  std::vector<char> in_accel(mesh.num_triangles(), 0);
  for (Index t : mesh.accel_triangles) in_accel[t] = 1;

  const std::size_t per_matrix = 36 * mesh.num_triangles();
  std::vector<Triplet> mass, mass_accel, rotary, rotary_accel;
  std::array<std::vector<Triplet>, num_moduli> bending;
  for (auto* v : {&mass, &mass_accel, &rotary, &rotary_accel}) v->reserve(per_matrix);
  for (auto& v : bending) v.reserve(per_matrix);

  FullOperators ops;
  ops.load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const ElementMatrices em = element_matrices(element_basis(mesh, t));
    const auto ids = element_dofs(mesh, dofs, t);
    // Accelerometer matrices keep the full pattern (zero outside the
    // footprint) so every operator shares one sparsity structure.
    const double chi = in_accel[t] ? 1.0 : 0.0;
    for (int i = 0; i < 6; ++i) {
      ops.load[ids[i]] += em.load[i];
      for (int j = 0; j < 6; ++j) {
        mass.emplace_back(ids[i], ids[j], em.mass(i, j));
        mass_accel.emplace_back(ids[i], ids[j], chi * em.mass(i, j));
        rotary.emplace_back(ids[i], ids[j], em.rotary(i, j));
        rotary_accel.emplace_back(ids[i], ids[j], chi * em.rotary(i, j));
        for (int a = 0; a < num_moduli; ++a) bending[a].emplace_back(ids[i], ids[j], em.bending[a](i, j));
      }
    }
  }

  ops.mass = from_triplets(n, n, mass);
  ops.mass_accel = from_triplets(n, n, mass_accel);
  ops.rotary = from_triplets(n, n, rotary);
  ops.rotary_accel = from_triplets(n, n, rotary_accel);
  for (int a = 0; a < num_moduli; ++a) ops.bending[a] = from_triplets(n, n, bending[a]);
  return ops;
}

Eigen::VectorXd probe_coefficients(const Mesh& mesh, const Point& point) {
  const auto t = mesh.locate(point);
  if (!t) throw MeshError("probe point lies outside the mesh");
  const DofMap dofs = make_dof_map(mesh);
  const MorleyBasis basis = element_basis(mesh, static_cast<std::size_t>(*t));
  const Vector6d h = basis.values(point);
  const auto ids = element_dofs(mesh, dofs, static_cast<std::size_t>(*t));
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.size()));
  for (int i = 0; i < 6; ++i) c[ids[i]] += h[i];
  return c;
}

Eigen::VectorXd interpolate(const Mesh& mesh, const std::function<double(const Point&)>& value,
                            const std::function<Point(const Point&)>& gradient) {
  const std::size_t nn = mesh.num_nodes();
  Eigen::VectorXd u(static_cast<Eigen::Index>(nn + mesh.num_edges()));
  for (std::size_t i = 0; i < nn; ++i) u[static_cast<Eigen::Index>(i)] = value(mesh.nodes[i]);
  for (std::size_t e = 0; e < mesh.num_edges(); ++e)
    u[static_cast<Eigen::Index>(nn + e)] = gradient(mesh.edges[e].midpoint).dot(mesh.edges[e].normal);
  return u;
}

std::string to_string(AccelMode mode) {
  switch (mode) {
    case AccelMode::correct: return "correct";
    case AccelMode::ignore: return "ignore";
    case AccelMode::smear: return "smear";
  }
  return "correct";
}

AccelMode accel_mode_from_string(const std::string& name) {
  if (name == "correct") return AccelMode::correct;
  if (name == "ignore") return AccelMode::ignore;
  if (name == "smear") return AccelMode::smear;
  throw std::invalid_argument("unknown accelerometer mode '" + name + "' (expected correct|ignore|smear)");
}

ConstantOperators assemble(const Mesh& mesh, const GeometryConfig& cfg, double density, double pressure) {
  if (!(density > 0.0)) throw std::invalid_argument("density must be positive");
  if (cfg.has_accelerometer() && mesh.accel_triangles.empty())
    throw MeshError("accelerometer configured but no triangle lies in its footprint");
  if (!mesh.locate(cfg.test_point)) throw MeshError("test point lies outside the mesh");

  const FullOperators full = assemble_full(mesh);
  ConstantOperators ops;
  ops.dofs = make_dof_map(mesh);
  const DofMap& dofs = ops.dofs;

  restrict(full.mass, dofs, ops.mass, ops.lift_mass);
  restrict(full.mass_accel, dofs, ops.mass_accel, ops.lift_mass_accel);
  restrict(full.rotary, dofs, ops.rotary, ops.lift_rotary);
  restrict(full.rotary_accel, dofs, ops.rotary_accel, ops.lift_rotary_accel);
  for (int a = 0; a < num_moduli; ++a) restrict(full.bending[a], dofs, ops.bending[a], ops.lift_bending[a]);

  ops.load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.num_free()));
  if (pressure != 0.0)
    for (std::size_t k = 0; k < dofs.num_free(); ++k)
      ops.load[static_cast<Eigen::Index>(k)] = pressure * full.load[dofs.free[k]];

  const Eigen::VectorXd c = probe_coefficients(mesh, cfg.test_point);
  ops.probe.resize(static_cast<Eigen::Index>(dofs.num_free()));
  for (std::size_t k = 0; k < dofs.num_free(); ++k) ops.probe[static_cast<Eigen::Index>(k)] = c[dofs.free[k]];
  ops.probe_offset = 0.0;
  for (std::size_t k = 0; k < dofs.constrained.size(); ++k)
    ops.probe_offset += c[dofs.constrained[k]] * dofs.lift_values[static_cast<Eigen::Index>(k)];

  ops.density = density;
  ops.half_thickness = cfg.half_thickness();
  ops.accel_area = mesh.accel_area;
  ops.plate_area = cfg.length * cfg.width;
  ops.density_accel = cfg.has_accelerometer() ? cfg.accel_mass / (cfg.thickness * mesh.accel_area) : 0.0;
  return ops;
}

ConstantOperators with_accel_mode(ConstantOperators ops, AccelMode mode) {
  switch (mode) {
    case AccelMode::correct:
      break;
    case AccelMode::ignore:
      ops.density_accel = 0.0;
      break;
    case AccelMode::smear:
      ops.density += ops.density_accel * ops.accel_area / ops.plate_area;
      ops.density_accel = 0.0;
      break;
  }
  return ops;
}

void write_triplets(const SparseMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  out << "# row col value\n";
  for (int col = 0; col < matrix.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace plateid
