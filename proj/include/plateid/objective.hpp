#pragma once

#include <functional>

#include <Eigen/Core>

namespace plateid {

struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd gradient;  // empty below order 1
  Eigen::MatrixXd hessian;   // empty below order 2
};

/// Smooth objective with derivatives on demand and a feasibility predicate.
struct Objective {
  /// `order` 0: value, 1: plus gradient, 2: plus Hessian.
  std::function<ObjectiveValue(const Eigen::VectorXd&, int)> evaluate;
  /// Points outside the domain are never evaluated. Empty means everywhere.
  std::function<bool(const Eigen::VectorXd&)> feasible;
};

}  // namespace plateid
