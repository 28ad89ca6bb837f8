#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "plateid/differential_evolution.hpp"
#include "plateid/sensitivity.hpp"
#include "plateid/trust_region.hpp"

namespace plateid {

/// Optimizer trace of one stage, with the parameter labels of its rows.
struct FitStage {
  std::string name;
  std::vector<std::string> labels;
  std::vector<TraceRow> trace;
};

struct FitResult {
  Eigen::VectorXd theta;  // local isotropic or the caller's parametrization
  std::vector<std::string> labels;
  double loss = 0.0;
  Eigen::VectorXd relative_errors;  // empty without a reference
  int iterations = 0;
  std::size_t value_evaluations = 0;
  std::size_t gradient_evaluations = 0;
  std::size_t hessian_evaluations = 0;
  std::string termination;
  std::vector<FitStage> stages;
  std::vector<std::string> warnings;
  double seconds = 0.0;

  // Global pipeline only: best DE point mapped to the local parameters.
  Eigen::VectorXd global_theta;
  Eigen::VectorXd global_relative_errors;
  double global_loss = 0.0;
  int best_restart = -1;
};

/// Trust-region fit from theta0 in the loss's parametrization.
FitResult fit_local(const LossFunction& loss, const Eigen::VectorXd& theta0, const TrustRegionOptions& options,
                    const std::optional<Eigen::VectorXd>& reference = std::nullopt);

struct GlobalFitOptions {
  DEOptions de;
  TrustRegionOptions polish;
  double fixed_loss_factor = 0.01;
  double d_lower = 1.0, d_upper = 100.0;              // D bounds
  double nu100_lower = 0.0, nu100_upper = 50.0;       // 100 nu bounds
  unsigned threads = 0;
};

/// Differential-evolution restarts over (D, 100 nu) with a fixed loss factor,
/// followed by a trust-region polish in (D, nu, beta) from the best restart.
/// `reference` is in (D, nu, beta).
FitResult fit_global(const ConstantOperators& ops, const ReferenceData& data, const GlobalFitOptions& options,
                     const std::optional<Eigen::VectorXd>& reference = std::nullopt);

}  // namespace plateid
