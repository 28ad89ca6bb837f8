#include "plateid/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plateid/parallel.hpp"

namespace plateid {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::size_t count_peaks(const ReferenceData& data) {
  FrequencyResponse response;
  response.freqs_hz = data.freqs_hz;
  response.values = data.values;
  return find_peaks(response).size();
}

}  // namespace

FitResult fit_local(const LossFunction& loss, const Eigen::VectorXd& theta0, const TrustRegionOptions& options,
                    const std::optional<Eigen::VectorXd>& reference) {
  const auto start = std::chrono::steady_clock::now();
  const Parametrization& param = loss.parametrization();
  if (!param.feasible(theta0))
    throw std::invalid_argument("initial parameters are outside the feasible set of the " + param.name() +
                                " parametrization");
  const OptimizationResult opt = trust_region_minimize(loss.objective(), theta0, options);

  FitResult out;
  out.theta = opt.x;
  out.labels = param.labels();
  out.loss = opt.value;
  if (reference) out.relative_errors = relative_errors(opt.x, *reference);
  out.iterations = opt.iterations;
  out.value_evaluations = opt.value_evaluations;
  out.gradient_evaluations = opt.gradient_evaluations;
  out.hessian_evaluations = opt.hessian_evaluations;
  out.termination = opt.termination;
  out.stages.push_back({"trust-region", out.labels, opt.trace});
  out.seconds = seconds_since(start);
  return out;
}

FitResult fit_global(const ConstantOperators& ops, const ReferenceData& data, const GlobalFitOptions& options,
                     const std::optional<Eigen::VectorXd>& reference) {
  const auto start = std::chrono::steady_clock::now();
  options.de.validate();
  data.validate();

  FitResult out;
  if (count_peaks(data) < 2)
    out.warnings.push_back("reference AFC shows fewer than two peaks; the global search is unlikely to succeed");

  ScaledIsotropicParametrization global(options.fixed_loss_factor);
  Eigen::VectorXd lower(2), upper(2);
  lower << options.d_lower, options.nu100_lower;
  upper << options.d_upper, options.nu100_upper;
  global.set_bounds(lower, upper);

  // Population members run concurrently; each loss then works on one thread.
  DEOptions de = options.de;
  de.threads = worker_count(static_cast<std::size_t>(de.population), options.threads);
  const LossFunction global_loss(ops, global, data, 1);
  auto objective = [&](const Eigen::VectorXd& x) {
    if (!global.feasible(x, false)) return std::numeric_limits<double>::infinity();
    return global_loss.value(x);
  };

  DEResult best;
  best.best_value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < de.restarts; ++r) {
    DEResult run = differential_evolution(objective, lower, upper, de, restart_seed(de.seed, r));
    out.value_evaluations += run.evaluations;
    out.stages.push_back({"de-restart-" + std::to_string(r), global.labels(), run.trace});
    if (run.best_value < best.best_value) {
      best = std::move(run);
      out.best_restart = r;
    }
  }
  if (!std::isfinite(best.best_value)) throw SolverError("every differential-evolution restart failed");

  // Local parameters (D, nu, beta) with beta at the fixed global value; nu is
  // kept strictly inside (0, 1/2) for the trust-region domain.
  IsotropicParametrization local;
  Eigen::VectorXd theta0(3);
  theta0 << best.best[0], std::clamp(best.best[1] / 100.0, 1e-6, 0.5 - 1e-6), options.fixed_loss_factor;
  out.global_theta = theta0;
  out.global_loss = best.best_value;
  if (reference) out.global_relative_errors = relative_errors(theta0, *reference);

  const LossFunction local_loss(ops, local, data, options.threads);
  const OptimizationResult opt = trust_region_minimize(local_loss.objective(), theta0, options.polish);
  out.theta = opt.x;
  out.labels = local.labels();
  out.loss = opt.value;
  if (reference) out.relative_errors = relative_errors(opt.x, *reference);
  out.iterations = opt.iterations;
  out.value_evaluations += opt.value_evaluations;
  out.gradient_evaluations = opt.gradient_evaluations;
  out.hessian_evaluations = opt.hessian_evaluations;
  out.termination = opt.termination;
  out.stages.push_back({"trust-region", out.labels, opt.trace});
  out.seconds = seconds_since(start);
  return out;
}

}  // namespace plateid
