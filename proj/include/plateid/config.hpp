#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "plateid/assembly.hpp"
#include "plateid/fit.hpp"
#include "plateid/forward.hpp"
#include "plateid/mesh.hpp"

namespace plateid {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Everything one experiment needs. Read from an INI file whose sections and
/// keys are listed in the README; unknown keys are errors.
struct RunConfig {
  GeometryConfig geometry;
  std::optional<std::filesystem::path> mesh_path;  // overrides the generated strip mesh

  double density = 7920.0;
  MaterialParams reference = MaterialParams::isotropic(17.97, 0.286, 0.003);
  AccelMode accel_mode = AccelMode::correct;

  double f_min = 0.0;
  double f_max = 600.0;
  std::size_t count = 201;

  double noise_level = 0.0;
  std::uint64_t noise_seed = 1;

  std::string parametrization = "isotropic";
  std::optional<Eigen::VectorXd> initial_theta;
  std::optional<Eigen::VectorXd> initial_relative_error;
  std::optional<Eigen::VectorXd> thresholds;  // bounds on |relative error|
  std::optional<std::filesystem::path> data_path;

  TrustRegionOptions trust_region;
  GlobalFitOptions global;

  std::size_t mode_count = 6;
  std::optional<Eigen::VectorXd> check_theta;
  double check_noise_level = 1.0;

  std::filesystem::path output_dir = "out";
  unsigned threads = 0;

  std::vector<double> frequencies() const;
  /// Initial point: explicit theta, or reference scaled by 1 + relative error.
  Eigen::VectorXd initial_point(const Parametrization& param) const;
  void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace plateid
