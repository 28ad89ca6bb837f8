#include "plateid/differential_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "plateid/parallel.hpp"

namespace plateid {

void DEOptions::validate() const {
  if (!(crossover > 0.0 && crossover < 1.0)) throw std::invalid_argument("DE: crossover rate must lie in (0, 1)");
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= 2.0))
    throw std::invalid_argument("DE: mutation bounds must satisfy 0 <= f_min < f_max <= 2");
  if (population < 3) throw std::invalid_argument("DE: population must hold at least 3 members");
  if (max_evaluations < static_cast<std::size_t>(population))
    throw std::invalid_argument("DE: evaluation budget smaller than the population");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("DE: spread tolerance must be nonnegative");
  if (restarts < 1) throw std::invalid_argument("DE: at least one run is required");
}

double relative_spread(const Eigen::MatrixXd& population) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < population.rows(); ++j) {
    const Eigen::ArrayXd row = population.row(j).array();
    const double mean = row.mean();
    const double var = (row - mean).square().sum() / static_cast<double>(row.size());
    const double ratio = std::sqrt(var) / std::abs(mean);
    worst = std::max(worst, std::isnan(ratio) ? std::numeric_limits<double>::infinity() : ratio);
  }
  return worst;
}

std::uint64_t restart_seed(std::uint64_t base, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

DEResult differential_evolution(const std::function<double(const Eigen::VectorXd&)>& f,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                const DEOptions& options, std::uint64_t seed) {
  options.validate();
  const Eigen::Index dim = lower.size();
  if (upper.size() != dim || dim == 0) throw std::invalid_argument("DE: bounds dimension mismatch");
  if (!lower.allFinite() || !upper.allFinite() || (lower.array() > upper.array()).any())
    throw std::invalid_argument("DE: bounds must be finite with lower <= upper");

  const int np = options.population;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto safe_eval = [&](const Eigen::VectorXd& x) {
    try {
      const double v = f(x);
      return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto evaluate_all = [&](const Eigen::MatrixXd& members, std::vector<double>& values) {
    parallel_for(static_cast<std::size_t>(members.cols()), worker_count(members.cols(), options.threads),
                 [&](std::size_t i, unsigned) { values[i] = safe_eval(members.col(static_cast<Eigen::Index>(i))); });
  };

  Eigen::MatrixXd pop(dim, np);
  for (int i = 0; i < np; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) pop(j, i) = lower[j] + (upper[j] - lower[j]) * unit(rng);
  std::vector<double> values(static_cast<std::size_t>(np));
  evaluate_all(pop, values);

  DEResult result;
  result.evaluations = static_cast<std::size_t>(np);
  auto best_index = [&] {
    return static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
  };

  std::uniform_int_distribution<int> pick_other(0, np - 2);
  std::uniform_int_distribution<int> pick_third(0, np - 3);
  std::uniform_int_distribution<Eigen::Index> pick_coord(0, dim - 1);
  Eigen::MatrixXd trial(dim, np);
  std::vector<double> trial_values(static_cast<std::size_t>(np));

  for (int gen = 0;; ++gen) {
    const int b = best_index();
    const double spread = relative_spread(pop);
    result.trace.push_back({gen, values[static_cast<std::size_t>(b)], pop.col(b), spread});
    result.generations = gen;
    if (spread <= options.tolerance) {
      result.termination = "population spread";
      break;
    }
    if (result.evaluations + static_cast<std::size_t>(np) > options.max_evaluations) {
      result.termination = "evaluation budget";
      break;
    }

    const double scale = options.f_min + (options.f_max - options.f_min) * unit(rng);
    for (int i = 0; i < np; ++i) {
      // i1 != i2, both != i.
      int i1 = pick_other(rng);
      if (i1 >= i) ++i1;
      int i2 = pick_third(rng);
      const int lo = std::min(i, i1), hi = std::max(i, i1);
      if (i2 >= lo) ++i2;
      if (i2 >= hi) ++i2;
      const Eigen::VectorXd mutant =
          (pop.col(b) + scale * (pop.col(i1) - pop.col(i2))).cwiseMax(lower).cwiseMin(upper);
      const Eigen::Index forced = pick_coord(rng);
      for (Eigen::Index j = 0; j < dim; ++j)
        trial(j, i) = (unit(rng) < options.crossover || j == forced) ? mutant[j] : pop(j, i);
    }
    evaluate_all(trial, trial_values);
    result.evaluations += static_cast<std::size_t>(np);
    for (int i = 0; i < np; ++i) {
      if (trial_values[static_cast<std::size_t>(i)] <= values[static_cast<std::size_t>(i)]) {
        pop.col(i) = trial.col(i);
        values[static_cast<std::size_t>(i)] = trial_values[static_cast<std::size_t>(i)];
      }
    }
  }
  const int b = best_index();
  result.best = pop.col(b);
  result.best_value = values[static_cast<std::size_t>(b)];
  return result;
}

}  // namespace plateid
