#pragma once

#include <random>

#include <Eigen/Core>

#include "plateid/assembly.hpp"
#include "plateid/forward.hpp"
#include "plateid/mesh.hpp"

namespace plateid::testing {

inline constexpr double steel_density = 7920.0;
inline constexpr double table_rigidity = 17.97;
inline constexpr double table_poisson = 0.286;
inline constexpr double table_loss = 0.003;

inline MaterialParams table_material() {
  return MaterialParams::isotropic(table_rigidity, table_poisson, table_loss);
}

inline Eigen::VectorXd table_theta() { return Eigen::Vector3d(table_rigidity, table_poisson, table_loss); }

/// Table geometry (shifted accelerometer) at the default 50x10 resolution,
/// assembled once per test binary.
inline const ConstantOperators& table_operators() {
  static const ConstantOperators ops = [] {
    const GeometryConfig cfg;
    return assemble(generate_strip_mesh(cfg), cfg, steel_density);
  }();
  return ops;
}

inline GeometryConfig no_accelerometer(GeometryConfig cfg = {}) {
  cfg.accel_mass = 0.0;
  return cfg;
}

/// Uniform draw in [a, b).
inline double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

}  // namespace plateid::testing
