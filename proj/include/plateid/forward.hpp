#pragma once

#include <array>
#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "plateid/assembly.hpp"
#include "plateid/sparse_ldlt.hpp"

namespace plateid {

using Complex = std::complex<double>;
using ComplexSparse = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;
using ComplexModuli = std::array<Complex, num_moduli>;

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Flexural rigidity 2 E e^3 / (3 (1 - nu^2)) of an isotropic plate with
/// half-thickness e.
double flexural_rigidity(double youngs_modulus, double poisson, double half_thickness);

/// Storage moduli D_alpha (Pa m^3) and loss factors beta_alpha, ordered as
/// `Modulus`.
struct MaterialParams {
  std::array<double, num_moduli> storage{};
  std::array<double, num_moduli> loss{};

  static MaterialParams isotropic(double rigidity, double poisson, double loss_factor);

  /// D_alpha (1 + i beta_alpha).
  ComplexModuli complex_moduli() const;
  double& d(Modulus a) { return storage[static_cast<int>(a)]; }
  double d(Modulus a) const { return storage[static_cast<int>(a)]; }

  /// Throws std::invalid_argument unless D11, D22, D66 > 0, all loss factors
  /// are nonnegative and the 3x3 storage matrix is positive definite.
  void validate() const;
};

/// Real and imaginary parts of sparse values, each as hi + lo.
struct WideValues {
  std::vector<double> re_hi, re_lo, im_hi, im_lo;
};

/// Builds the frequency-domain system
///   K(w) = -w^2 (M + e^2/3 L) + sum_alpha D_alpha (1 + i beta_alpha) K^alpha,
///   f(w) = f_l - w^2 (f_M + e^2/3 f_L) + sum_alpha D_alpha (1 + i beta_alpha) f^alpha,
/// where M, L carry the areal density 2e (rho_0 + chi rho_c) so that the
/// bending matrices enter with the moment-curvature rigidities unscaled.
///
/// The state is split as u = g t + v with t the rigid translation. Since
/// K^alpha t = f^alpha, the deviation solves
///   K(w) v = f_l - w^2 g (f_M + e^2/3 f_L - (M + e^2/3 L) t),
/// which carries no bending terms and vanishes at w = 0.
class SystemBuilder {
public:
  explicit SystemBuilder(const ConstantOperators& ops);

  const ConstantOperators& operators() const { return *ops_; }
  const SparseMatrix& inertia() const { return inertia_; }
  const Eigen::VectorXd& inertia_lift() const { return inertia_lift_; }
  const Eigen::VectorXd& translation() const { return translation_; }

  ComplexSparse matrix(double omega, const ComplexModuli& moduli) const;
  /// Load of the deviation v from the rigid stand motion.
  Eigen::VectorXcd rhs(double omega) const;
  /// |f(w)| of the lifted system; K v - rhs equals K u - f, so state
  /// residuals are measured against it.
  double lifted_rhs_norm(double omega, const ComplexModuli& moduli) const;
  /// u = g t + v.
  Eigen::VectorXcd state(const Eigen::VectorXcd& deviation) const;
  /// Values of sum_alpha D_alpha (1 + i beta_alpha) K^alpha on the shared
  /// pattern as unevaluated sums hi + lo of doubles, combined with error-free
  /// transformations.
  void fill_stiffness(const ComplexModuli& moduli, WideValues& out) const;
  /// out = stiffness - w^2 (M + e^2/3 L), in the same representation.
  void add_inertia(double omega, const WideValues& stiffness, WideValues& out) const;
  /// Writes matrix values into `out`, which must already have the shared
  /// pattern (e.g. from a previous `matrix` call).
  void fill_matrix(double omega, const ComplexModuli& moduli, ComplexSparse& out) const;

private:
  const ConstantOperators* ops_;
  SparseMatrix inertia_;
  Eigen::VectorXd inertia_lift_;
  Eigen::VectorXd translation_;
  Eigen::VectorXd translation_inertia_;  // f_M + e^2/3 f_L - (M + e^2/3 L) t
};

/// Factorization workspace for one frequency at a time. Not thread-safe; give
/// each worker its own instance.
class FrequencySolver {
public:
  explicit FrequencySolver(const SystemBuilder& builder);
  ~FrequencySolver();
  FrequencySolver(FrequencySolver&&) noexcept;
  FrequencySolver& operator=(FrequencySolver&&) noexcept;

  /// Assembles and factorizes K(w) for the given moduli.
  void factorize(double omega, const ComplexModuli& moduli);
  void factorize(double omega, const MaterialParams& mat) { factorize(omega, mat.complex_moduli()); }

  const ComplexSparse& matrix() const { return matrix_; }
  Eigen::VectorXcd rhs() const;
  double omega() const { return omega_; }
  /// Deviation v and full state u for the current factorization, with
  /// |K u - f| <= default_tolerance |f| for the lifted load f.
  Eigen::VectorXcd deviation() const;
  Eigen::VectorXcd state() const { return builder_->state(deviation()); }

  /// Solves K x = b with the current factorization. The residual
  /// |K x - b| is checked against `tolerance` max(|b|, reference_norm); the
  /// symmetric factorization is refined and, if still inaccurate, replaced
  /// by a pivoting LU. SolverError if neither reaches the tolerance.
  Eigen::VectorXcd solve(const Eigen::VectorXcd& b, double tolerance = default_tolerance,
                         double reference_norm = 0.0) const;
  Eigen::MatrixXcd solve(const Eigen::MatrixXcd& b, double tolerance = default_tolerance) const;

  static constexpr double default_tolerance = 1e-10;
  static constexpr int max_refinement_steps = 4;

private:
  Eigen::VectorXcd solve_fallback(const Eigen::VectorXcd& b) const;
  /// b - K(w) x accumulated in extended precision.
  Eigen::VectorXcd residual(const Eigen::VectorXcd& b, const Eigen::VectorXcd& x) const;

  const SystemBuilder* builder_;
  ComplexSparse matrix_;
  ComplexModuli moduli_{};
  double omega_ = 0.0;
  WideValues stiffness_;  // for stiffness_moduli_
  ComplexModuli stiffness_moduli_{};
  bool stiffness_ready_ = false;
  WideValues wide_;  // K(w) without the rounding of matrix_
  SparseLDLT<Complex> ldlt_;
  bool ldlt_ok_ = false;
  struct Fallback;
  mutable std::unique_ptr<Fallback> fallback_;  // pivoting LU, built on demand
};

/// Complex DOF vector over the free set for one frequency (rad/s).
Eigen::VectorXcd solve_frequency(const ConstantOperators& ops, const MaterialParams& mat, double omega);

struct FrequencyResponse {
  std::vector<double> freqs_hz;
  std::vector<Complex> values;

  std::size_t size() const { return values.size(); }
  double omega(std::size_t k) const;
  double amplitude(std::size_t k) const { return std::abs(values[k]); }
  double phase(std::size_t k) const { return std::arg(values[k]); }
};

/// AFC at the test point: values[k] = P(u(2 pi freqs_hz[k])).
/// `threads` = 0 uses hardware concurrency.
FrequencyResponse sweep(const ConstantOperators& ops, const MaterialParams& mat,
                        const std::vector<double>& freqs_hz, unsigned threads = 0);

/// `count` equidistant points from f_min to f_max inclusive.
std::vector<double> linear_grid(double f_min, double f_max, std::size_t count);

/// Strict local maxima of |u| over the grid, endpoints excluded.
std::vector<std::size_t> find_peaks(const FrequencyResponse& response);

struct Mode {
  Complex eigenvalue;  // Lambda
  double omega = 0.0;  // Re sqrt(Lambda), rad/s
  double decay = 0.0;  // Im sqrt(Lambda), 1/s
  Eigen::VectorXcd shape;
  double residual = 0.0;  // normwise backward error of the eigenpair

  double frequency_hz() const;
};

struct ModalResult {
  std::vector<Mode> modes;  // sorted by omega
};

/// Smallest-|Lambda| solutions of
///   (sum_alpha D_alpha (1 + i beta_alpha) K^alpha) u = Lambda (M + e^2/3 L) u
/// by shift-invert subspace iteration about zero.
ModalResult natural_modes(const ConstantOperators& ops, const MaterialParams& mat, std::size_t count);

}  // namespace plateid
