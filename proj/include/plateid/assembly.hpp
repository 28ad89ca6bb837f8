#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "plateid/mesh.hpp"
#include "plateid/morley.hpp"

namespace plateid {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Global numbering: node i -> i, edge e -> num_nodes + e. The constrained set
/// holds node values on clamped nodes and normal derivatives on clamped edges.
struct DofMap {
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  std::vector<Index> free;
  std::vector<Index> constrained;
  std::vector<Index> to_free;  // global -> position in `free`, or -1
  // Prescribed values on `constrained` for unit stand amplitude: 1 on node
  // DOFs, 0 on edge-normal DOFs (clamped slope).
  Eigen::VectorXd lift_values;

  std::size_t size() const { return num_nodes + num_edges; }
  std::size_t num_free() const { return free.size(); }
  Index node_dof(Index node) const { return node; }
  Index edge_dof(Index edge) const { return static_cast<Index>(num_nodes) + edge; }
};

DofMap make_dof_map(const Mesh& mesh);

/// Parameter-independent matrices over all degrees of freedom. Every matrix
/// shares one sparsity pattern.
struct FullOperators {
  SparseMatrix mass;               // M0
  SparseMatrix mass_accel;         // Mc
  SparseMatrix rotary;             // L0
  SparseMatrix rotary_accel;       // Lc
  std::array<SparseMatrix, num_moduli> bending;  // K^alpha
  Eigen::VectorXd load;            // int h_j
};

FullOperators assemble_full(const Mesh& mesh);

/// Coefficients of point evaluation over all degrees of freedom, using the
/// lowest-index triangle containing the point.
Eigen::VectorXd probe_coefficients(const Mesh& mesh, const Point& point);

/// Morley interpolant (node values, edge-midpoint normal derivatives) of a
/// smooth function over all degrees of freedom.
Eigen::VectorXd interpolate(const Mesh& mesh, const std::function<double(const Point&)>& value,
                            const std::function<Point(const Point&)>& gradient);

/// How the accelerometer inertia enters the model.
enum class AccelMode {
  correct,  // local density increase over the accelerometer footprint
  ignore,   // accelerometer mass neglected
  smear     // accelerometer mass spread uniformly over the plate
};

std::string to_string(AccelMode mode);
AccelMode accel_mode_from_string(const std::string& name);

/// Matrices and lift vectors restricted to the free set, ready for building
/// the frequency-domain system. Lift vectors follow the sign convention
/// f = -A_{I,D} g.
struct ConstantOperators {
  DofMap dofs;
  SparseMatrix mass, mass_accel, rotary, rotary_accel;
  std::array<SparseMatrix, num_moduli> bending;
  Eigen::VectorXd lift_mass, lift_mass_accel, lift_rotary, lift_rotary_accel;
  std::array<Eigen::VectorXd, num_moduli> lift_bending;
  Eigen::VectorXd load;  // f_l over the free set

  Eigen::VectorXd probe;      // c
  double probe_offset = 0.0;  // c0

  double density = 0.0;        // rho_0
  double density_accel = 0.0;  // rho_c
  double half_thickness = 0.0;
  double accel_area = 0.0;
  double plate_area = 0.0;
  double boundary_amplitude = 1.0;

  std::size_t num_free() const { return dofs.num_free(); }

  /// Rigid unit translation over the free set: 1 at node values, 0 at edge
  /// slopes. Lies in the null space of every bending matrix.
  Eigen::VectorXd translation() const {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_free()));
    for (std::size_t k = 0; k < num_free(); ++k)
      if (dofs.free[k] < static_cast<Index>(dofs.num_nodes)) t[static_cast<Eigen::Index>(k)] = 1.0;
    return t;
  }

  /// Probe functional P(u) = c^T u + g c0. Lift vectors and c0 are stored
  /// for g = 1 and scaled by `boundary_amplitude` when the system is built.
  double evaluate_probe(const Eigen::VectorXd& u) const {
    return probe.dot(u) + boundary_amplitude * probe_offset;
  }
  std::complex<double> evaluate_probe(const Eigen::VectorXcd& u) const {
    return (u.array() * probe.array().cast<std::complex<double>>()).sum() + boundary_amplitude * probe_offset;
  }
};

/// `pressure` is a uniform transverse load (Pa) applied at the driving
/// frequency; zero in all shipped experiments.
ConstantOperators assemble(const Mesh& mesh, const GeometryConfig& cfg, double density,
                           double pressure = 0.0);

/// Rescales the accelerometer densities to realise one of the modelling modes.
ConstantOperators with_accel_mode(ConstantOperators ops, AccelMode mode);

/// Writes `row col value` lines (zero-based) for debugging.
void write_triplets(const SparseMatrix& matrix, const std::filesystem::path& path);

}  // namespace plateid
