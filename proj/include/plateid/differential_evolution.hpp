#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "plateid/trust_region.hpp"

namespace plateid {

struct DEOptions {
  double crossover = 0.7;  // CR
  double f_min = 0.7;
  double f_max = 1.0;
  int population = 30;
  std::size_t max_evaluations = 5000;  // per run
  double tolerance = 1e-2;             // relative spread stop
  int restarts = 5;
  std::uint64_t seed = 1;
  unsigned threads = 1;  // concurrent objective evaluations per generation

  void validate() const;
};

struct DEResult {
  Eigen::VectorXd best;
  double best_value = 0.0;
  int generations = 0;
  std::size_t evaluations = 0;
  std::string termination;
  /// Best member per generation; delta_or_spread holds max_j std_j / |mean_j|.
  std::vector<TraceRow> trace;
};

/// Largest per-coordinate ratio std(x_j) / |mean(x_j)| over the population
/// (columns are members).
double relative_spread(const Eigen::MatrixXd& population);

/// best/1/bin differential evolution on the box [lower, upper]. Trial
/// vectors of one generation are evaluated together and then selected
/// greedily. Deterministic for a given seed and independent of `threads`.
/// Non-finite or throwing evaluations count as +infinity.
DEResult differential_evolution(const std::function<double(const Eigen::VectorXd&)>& f,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                const DEOptions& options, std::uint64_t seed);

/// Seed of restart `r` derived from the base seed.
std::uint64_t restart_seed(std::uint64_t base, int restart);

}  // namespace plateid
