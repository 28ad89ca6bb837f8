#include "plateid/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace plateid {

double model_decrease(const Eigen::VectorXd& g, const Eigen::MatrixXd& b, const Eigen::VectorXd& p) {
  return g.dot(p) + 0.5 * p.dot(b * p);
}

SubproblemSolution solve_tr_subproblem(const Eigen::VectorXd& g, const Eigen::MatrixXd& b, double delta) {
  const Eigen::Index k = g.size();
  if (b.rows() != k || b.cols() != k) throw std::invalid_argument("subproblem: dimension mismatch");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("subproblem: radius must be positive");
  SubproblemSolution out;
  if (k == 0) return out;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (b + b.transpose()));
  const Eigen::VectorXd lam = eig.eigenvalues();  // ascending
  const Eigen::MatrixXd& q = eig.eigenvectors();
  const Eigen::VectorXd gh = q.transpose() * g;
  const double gnorm = g.norm();
  const double lam_scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  const double lam1 = lam[0];

  // Eigen-directions sharing the leftmost eigenvalue, and whether g reaches
  // them.
  const double eig_tol = 1e-12 * lam_scale;
  Eigen::Index low = 0;
  while (low < k && lam[low] - lam1 <= eig_tol) ++low;
  bool gradient_on_low = false;
  for (Eigen::Index i = 0; i < low; ++i)
    if (std::abs(gh[i]) > 1e-14 * std::max(gnorm, std::numeric_limits<double>::min())) gradient_on_low = true;

  auto coefficients = [&](double sigma, Eigen::Index from) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = from; i < k; ++i) c[i] = -gh[i] / (lam[i] + sigma);
    return c;
  };

  if (lam1 > eig_tol) {
    const Eigen::VectorXd p = q * coefficients(0.0, 0);
    if (p.norm() <= delta) {
      out.step = p;
      return out;
    }
  } else if (!gradient_on_low) {
    // Minimizers along the leftmost eigenspace: hard case or singular B.
    const double sigma = std::max(0.0, -lam1);
    const Eigen::VectorXd rest = q * coefficients(sigma, low);
    const double rnorm = rest.norm();
    if (rnorm <= delta) {
      out.multiplier = sigma;
      if (lam1 >= -eig_tol) {
        out.step = rest;
        return out;
      }
      const double tau = std::sqrt(std::max(0.0, delta * delta - rnorm * rnorm));
      out.step = rest + tau * q.col(0);
      out.on_boundary = true;
      out.hard_case = true;
      return out;
    }
  }

  // Boundary solution: sigma > max(0, -lam1) with |p(sigma)| = delta, found by
  // safeguarded Newton on the secular function 1/|p(sigma)| - 1/delta.
  const Eigen::Index from = gradient_on_low ? 0 : low;
  auto norm_at = [&](double sigma) { return coefficients(sigma, from).norm(); };
  double lo = std::max(0.0, -lam1);
  double hi = std::max(lo, gnorm / delta - lam1);
  if (norm_at(hi) > delta) hi = 2.0 * hi + lam_scale;  // guards rounding at the bound
  double sigma = hi;
  for (int iter = 0; iter < 300; ++iter) {
    const Eigen::VectorXd c = coefficients(sigma, from);
    const double pn = c.norm();
    if (std::abs(pn - delta) <= 1e-15 * delta) break;
    if (pn > delta) lo = sigma;
    else hi = sigma;
    double cubic = 0.0;
    for (Eigen::Index i = from; i < k; ++i) cubic += c[i] * c[i] / (lam[i] + sigma);
    const double psi = 1.0 / pn - 1.0 / delta;
    const double dpsi = cubic / (pn * pn * pn);
    double next = sigma - psi / dpsi;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == sigma || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    sigma = next;
  }
  Eigen::VectorXd p = q * coefficients(sigma, from);
  const double pn = p.norm();
  if (pn > delta) p *= delta / pn;
  out.step = p;
  out.multiplier = sigma;
  out.on_boundary = true;
  return out;
}

bool bfgs_update(Eigen::MatrixXd& b, const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  const double sy = s.dot(y);
  const Eigen::VectorXd bs = b * s;
  const double sbs = s.dot(bs);
  if (!(sy > 1e-12 * s.norm() * y.norm() && sbs > 0.0)) return false;
  b += y * y.transpose() / sy - bs * bs.transpose() / sbs;
  b = (0.5 * (b + b.transpose())).eval();
  return true;
}

std::string to_string(ModelUpdate kind) { return kind == ModelUpdate::bfgs ? "bfgs" : "newton"; }

ModelUpdate model_update_from_string(const std::string& name) {
  if (name == "newton" || name == "exact") return ModelUpdate::exact_newton;
  if (name == "bfgs") return ModelUpdate::bfgs;
  throw std::invalid_argument("unknown model update '" + name + "'");
}

void TrustRegionOptions::validate() const {
  if (!(delta_max > 0.0)) throw std::invalid_argument("trust region: delta_max must be positive");
  if (!(delta0 > 0.0 && delta0 < delta_max)) throw std::invalid_argument("trust region: delta0 must lie in (0, delta_max)");
  if (!(eta >= 0.0 && eta < 0.25)) throw std::invalid_argument("trust region: eta must lie in [0, 1/4)");
  if (max_iterations < 0) throw std::invalid_argument("trust region: max_iterations must be nonnegative");
  if (!(gradient_tolerance >= 0.0 && step_tolerance >= 0.0 && decrease_tolerance >= 0.0))
    throw std::invalid_argument("trust region: tolerances must be nonnegative");
  if (std::isnan(value_tolerance)) throw std::invalid_argument("trust region: value_tolerance must not be NaN");
}

OptimizationResult trust_region_minimize(const Objective& objective, const Eigen::VectorXd& x0,
                                         const TrustRegionOptions& options) {
  options.validate();
  if (!objective.evaluate) throw std::invalid_argument("trust region: objective has no evaluator");
  if (objective.feasible && !objective.feasible(x0)) throw std::invalid_argument("trust region: infeasible start");

  OptimizationResult result;
  const bool newton = options.update == ModelUpdate::exact_newton;
  auto evaluate = [&](const Eigen::VectorXd& x, int order) {
    ObjectiveValue v = objective.evaluate(x, order);
    ++result.value_evaluations;
    if (order >= 1) ++result.gradient_evaluations;
    if (order >= 2) ++result.hessian_evaluations;
    return v;
  };

  Eigen::VectorXd x = x0;
  ObjectiveValue current = evaluate(x, 2);  // both variants start from the exact Hessian
  if (!std::isfinite(current.value)) throw std::invalid_argument("trust region: objective not finite at start");
  Eigen::MatrixXd model = 0.5 * (current.hessian + current.hessian.transpose());
  double delta = options.delta0;

  for (int iter = 0;; ++iter) {
    result.trace.push_back({iter, current.value, x, delta});
    result.iterations = iter;
    if (current.value <= options.value_tolerance) {
      result.termination = "value tolerance";
      break;
    }
    if (current.gradient.norm() <= options.gradient_tolerance) {
      result.termination = "gradient tolerance";
      break;
    }
    if (iter >= options.max_iterations) {
      result.termination = "iteration limit";
      break;
    }

    const SubproblemSolution sub = solve_tr_subproblem(current.gradient, model, delta);
    const Eigen::VectorXd& p = sub.step;
    const double predicted = -model_decrease(current.gradient, model, p);
    if (!(predicted > options.decrease_tolerance * std::abs(current.value))) {
      result.termination = "predicted decrease below tolerance";
      break;
    }
    const Eigen::VectorXd candidate = x + p;

    double rho = -std::numeric_limits<double>::infinity();
    ObjectiveValue next;
    if (predicted > 0.0 && (!objective.feasible || objective.feasible(candidate))) {
      next = evaluate(candidate, newton ? 2 : 1);
      if (std::isfinite(next.value)) rho = (current.value - next.value) / predicted;
    }

    const double pn = p.norm();
    if (rho < 0.25) {
      delta *= 0.25;
    } else if (rho > 0.75 && pn >= delta * (1.0 - 1e-10)) {
      delta = std::min(2.0 * delta, options.delta_max);
    }

    if (rho > options.eta) {
      const Eigen::VectorXd s = candidate - x;
      const Eigen::VectorXd y = next.gradient - current.gradient;
      x = candidate;
      current = std::move(next);
      if (newton) {
        model = 0.5 * (current.hessian + current.hessian.transpose());
      } else {
        bfgs_update(model, s, y);
      }
      if (pn <= options.step_tolerance * std::max(1.0, x.norm())) {
        result.trace.push_back({iter + 1, current.value, x, delta});
        result.iterations = iter + 1;
        result.termination = "step tolerance";
        break;
      }
    } else if (delta <= options.step_tolerance * std::max(1.0, x.norm())) {
      result.trace.push_back({iter + 1, current.value, x, delta});
      result.iterations = iter + 1;
      result.termination = "trust region collapsed";
      break;
    }
  }
  result.x = x;
  result.value = current.value;
  return result;
}

}  // namespace plateid
