#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "plateid/forward.hpp"
#include "plateid/objective.hpp"
#include "plateid/parametrization.hpp"

namespace plateid {

/// Measured (or synthetic) AFC samples.
struct ReferenceData {
  std::vector<double> freqs_hz;
  std::vector<Complex> values;
  double noise_level = 0.0;  // percent of max |P|
  std::uint64_t seed = 0;

  std::size_t size() const { return values.size(); }
  void validate() const;
};

/// Adds independent N(0, sigma^2) noise to the real and imaginary parts, with
/// sigma = percent / 100 * max|P|. Returns sigma.
double add_noise(std::vector<Complex>& values, double percent, std::uint64_t seed);

/// Forward sweep at the reference parameters plus optional noise.
ReferenceData synthesize_data(const ConstantOperators& ops, const MaterialParams& mat,
                              const std::vector<double>& freqs_hz, double noise_percent, std::uint64_t seed,
                              unsigned threads = 0);

/// AFC value and its parameter derivatives at one frequency.
struct PointSensitivity {
  Complex value;
  Eigen::VectorXcd gradient;  // dP/dtheta_j
  Eigen::MatrixXcd hessian;   // d2P/dtheta_j dtheta_l
};

using LossValue = ObjectiveValue;

/// L(theta) = 1/N sum_k |P(theta, w_k) - P_k|^2. Derivatives use one adjoint
/// solve per frequency plus, for the Hessian, one solve per active modulus;
/// all share the factorization of the state solve. Safe to call from several
/// threads.
class LossFunction {
public:
  LossFunction(const ConstantOperators& ops, const Parametrization& param, ReferenceData data,
               unsigned threads = 0);
  ~LossFunction();
  LossFunction(const LossFunction&) = delete;
  LossFunction& operator=(const LossFunction&) = delete;

  double value(const Eigen::VectorXd& theta) const { return evaluate(theta, 0).value; }
  /// `order` 0: value, 1: plus gradient, 2: plus Hessian.
  LossValue evaluate(const Eigen::VectorXd& theta, int order) const;

  /// Per-frequency AFC values with derivatives up to `order`.
  std::vector<PointSensitivity> sensitivities(const Eigen::VectorXd& theta, int order) const;
  std::vector<Complex> predict(const Eigen::VectorXd& theta) const;

  const Parametrization& parametrization() const { return *param_; }
  const ReferenceData& data() const { return data_; }
  const ConstantOperators& operators() const { return *ops_; }
  Eigen::Index dimension() const { return param_->dimension(); }
  std::size_t evaluations() const { return evaluations_.load(); }
  unsigned threads() const { return threads_; }

  /// Objective over theta whose domain is the parametrization's strict
  /// feasible set. The loss must outlive the returned object.
  Objective objective() const;

private:
  class SolverPool;

  const ConstantOperators* ops_;
  const Parametrization* param_;
  ReferenceData data_;
  unsigned threads_;
  SystemBuilder builder_;
  std::unique_ptr<SolverPool> pool_;
  mutable std::atomic<std::size_t> evaluations_{0};
};

/// Exact derivatives next to fourth-order central differences with steps
/// relative_step * |theta_j| (relative_step when theta_j = 0). Discrepancies are
/// max |exact - fd| / (|fd| + 1e-6 max|fd|) over the entries.
struct DerivativeCheck {
  double value = 0.0;
  Eigen::VectorXd gradient, fd_gradient;
  Eigen::MatrixXd hessian, fd_hessian;  // fd_hessian: differences of the exact gradient
  double gradient_discrepancy = 0.0;
  double hessian_discrepancy = 0.0;
  double hessian_asymmetry = 0.0;  // |H - H^T| / |H| in the Frobenius norm
};

DerivativeCheck check_derivatives(const LossFunction& loss, const Eigen::VectorXd& theta,
                                  double relative_step = 1.5e-5);

}  // namespace plateid
