#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "plateid/objective.hpp"

namespace plateid {

/// Minimizer of g^T p + 1/2 p^T B p over |p| <= delta.
struct SubproblemSolution {
  Eigen::VectorXd step;
  double multiplier = 0.0;  // sigma >= 0 with (B + sigma I) p = -g
  bool on_boundary = false;
  bool hard_case = false;
};

/// Exact solution through the eigendecomposition of B, including the hard
/// case. B must be symmetric.
SubproblemSolution solve_tr_subproblem(const Eigen::VectorXd& g, const Eigen::MatrixXd& b, double delta);

/// g^T p + 1/2 p^T B p.
double model_decrease(const Eigen::VectorXd& g, const Eigen::MatrixXd& b, const Eigen::VectorXd& p);

/// B + y y^T / (s^T y) - B s s^T B / (s^T B s), symmetrized. Skipped (returns
/// false) when s^T y <= 1e-12 |s| |y| or s^T B s <= 0.
bool bfgs_update(Eigen::MatrixXd& b, const Eigen::VectorXd& s, const Eigen::VectorXd& y);

enum class ModelUpdate { exact_newton, bfgs };

std::string to_string(ModelUpdate kind);
ModelUpdate model_update_from_string(const std::string& name);

struct TrustRegionOptions {
  double delta_max = 100.0;
  double delta0 = 1.0;
  double eta = 0.1;
  int max_iterations = 100;
  double gradient_tolerance = 1e-14;  // stop when |g| falls below
  double step_tolerance = 1e-13;      // stop when an accepted step or the radius is this small relative to |x|
  double value_tolerance = -std::numeric_limits<double>::infinity();  // stop when f falls below
  double decrease_tolerance = 1e-13;  // stop when the model predicts less than this fraction of f
  ModelUpdate update = ModelUpdate::exact_newton;

  void validate() const;
};

/// One optimizer iteration as written to trace files.
struct TraceRow {
  int iteration = 0;
  double loss = 0.0;
  Eigen::VectorXd theta;
  double delta_or_spread = 0.0;
};

struct OptimizationResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  std::size_t value_evaluations = 0;
  std::size_t gradient_evaluations = 0;
  std::size_t hessian_evaluations = 0;
  std::string termination;
  std::vector<TraceRow> trace;  // current iterate at the start of each iteration, then the final one
};

/// Trust-region minimization with exact-Hessian or BFGS models. Candidates
/// outside the feasible set are rejected and the radius shrinks.
OptimizationResult trust_region_minimize(const Objective& objective, const Eigen::VectorXd& x0,
                                         const TrustRegionOptions& options);

}  // namespace plateid
