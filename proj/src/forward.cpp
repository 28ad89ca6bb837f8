#include "plateid/forward.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseLU>

#include "plateid/parallel.hpp"

namespace plateid {

namespace {

bool same_pattern(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  return std::equal(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1, b.outerIndexPtr()) &&
         std::equal(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros(), b.innerIndexPtr());
}

// hi + lo += c k with the product error from fma and the sum error from
// TwoSum.
void accumulate(double& hi, double& lo, double c, double k) {
  const double prod = c * k;
  const double perr = std::fma(c, k, -prod);
  const double sum = hi + prod;
  const double bv = sum - hi;
  const double serr = (hi - (sum - bv)) + (prod - bv);
  hi = sum;
  lo += perr + serr;
}

}  // namespace

double flexural_rigidity(double youngs_modulus, double poisson, double half_thickness) {
  const double e3 = half_thickness * half_thickness * half_thickness;
  return 2.0 * youngs_modulus * e3 / (3.0 * (1.0 - poisson * poisson));
}

MaterialParams MaterialParams::isotropic(double rigidity, double poisson, double loss_factor) {
  MaterialParams m;
  m.d(Modulus::d11) = rigidity;
  m.d(Modulus::d22) = rigidity;
  m.d(Modulus::d12) = poisson * rigidity;
  m.d(Modulus::d66) = (1.0 - poisson) * rigidity;
  m.loss.fill(loss_factor);
  return m;
}

ComplexModuli MaterialParams::complex_moduli() const {
  ComplexModuli out;
  for (int a = 0; a < num_moduli; ++a) out[a] = Complex(storage[a], storage[a] * loss[a]);
  return out;
}

void MaterialParams::validate() const {
  for (int a = 0; a < num_moduli; ++a) {
    if (!std::isfinite(storage[a]) || !std::isfinite(loss[a]))
      throw std::invalid_argument("material parameters must be finite");
    if (loss[a] < 0.0)
      throw std::invalid_argument(std::string("loss factor beta_") + modulus_names[a] + " is negative");
  }
  if (!(d(Modulus::d11) > 0.0) || !(d(Modulus::d22) > 0.0) || !(d(Modulus::d66) > 0.0))
    throw std::invalid_argument("D11, D22 and D66 must be positive");
  Eigen::Matrix3d s;
  s << d(Modulus::d11), d(Modulus::d12), d(Modulus::d16),
       d(Modulus::d12), d(Modulus::d22), d(Modulus::d26),
       d(Modulus::d16), d(Modulus::d26), d(Modulus::d66);
  Eigen::LLT<Eigen::Matrix3d> llt(s);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("storage stiffness matrix is not positive definite");
}

SystemBuilder::SystemBuilder(const ConstantOperators& ops) : ops_(&ops) {
  for (const auto* m : {&ops.mass_accel, &ops.rotary, &ops.rotary_accel})
    if (!same_pattern(ops.mass, *m)) throw std::logic_error("constant operators do not share a sparsity pattern");
  for (const auto& k : ops.bending)
    if (!same_pattern(ops.mass, k)) throw std::logic_error("constant operators do not share a sparsity pattern");

  const double e = ops.half_thickness;
  const double areal = 2.0 * e;
  const double rot = e * e / 3.0;
  const double r0 = ops.density, rc = ops.density_accel;
  inertia_ = ops.mass;
  const Eigen::Index nnz = ops.mass.nonZeros();
  double* v = inertia_.valuePtr();
  for (Eigen::Index p = 0; p < nnz; ++p)
    v[p] = areal * (r0 * ops.mass.valuePtr()[p] + rc * ops.mass_accel.valuePtr()[p] +
                    rot * (r0 * ops.rotary.valuePtr()[p] + rc * ops.rotary_accel.valuePtr()[p]));
  inertia_lift_ = areal * (r0 * ops.lift_mass + rc * ops.lift_mass_accel +
                           rot * (r0 * ops.lift_rotary + rc * ops.lift_rotary_accel));
  translation_ = ops.translation();
  translation_inertia_ = inertia_lift_ - inertia_ * translation_;
}

void SystemBuilder::fill_matrix(double omega, const ComplexModuli& moduli, ComplexSparse& out) const {
  const Eigen::Index nnz = inertia_.nonZeros();
  const double w2 = omega * omega;
  Complex* v = out.valuePtr();
  const double* in = inertia_.valuePtr();
  for (Eigen::Index p = 0; p < nnz; ++p) v[p] = Complex(-w2 * in[p], 0.0);
  for (int a = 0; a < num_moduli; ++a) {
    const Complex c = moduli[a];
    if (c == Complex(0.0)) continue;
    const double* k = ops_->bending[a].valuePtr();
    for (Eigen::Index p = 0; p < nnz; ++p) v[p] += c * k[p];
  }
}

void SystemBuilder::fill_stiffness(const ComplexModuli& moduli, WideValues& out) const {
  const std::size_t nnz = static_cast<std::size_t>(inertia_.nonZeros());
  out.re_hi.assign(nnz, 0.0);
  out.re_lo.assign(nnz, 0.0);
  out.im_hi.assign(nnz, 0.0);
  out.im_lo.assign(nnz, 0.0);
  double* rh = out.re_hi.data();
  double* rl = out.re_lo.data();
  double* ih = out.im_hi.data();
  double* il = out.im_lo.data();
  for (int a = 0; a < num_moduli; ++a) {
    if (moduli[a] == Complex(0.0)) continue;
    const double cr = moduli[a].real(), ci = moduli[a].imag();
    const double* k = ops_->bending[a].valuePtr();
    for (std::size_t p = 0; p < nnz; ++p) {
      accumulate(rh[p], rl[p], cr, k[p]);
      accumulate(ih[p], il[p], ci, k[p]);
    }
  }
}

void SystemBuilder::add_inertia(double omega, const WideValues& stiffness, WideValues& out) const {
  const std::size_t nnz = static_cast<std::size_t>(inertia_.nonZeros());
  out.re_hi = stiffness.re_hi;
  out.re_lo = stiffness.re_lo;
  out.im_hi = stiffness.im_hi;
  out.im_lo = stiffness.im_lo;
  const double w2 = -omega * omega;
  const double* in = inertia_.valuePtr();
  double* rh = out.re_hi.data();
  double* rl = out.re_lo.data();
  for (std::size_t p = 0; p < nnz; ++p) accumulate(rh[p], rl[p], w2, in[p]);
}

ComplexSparse SystemBuilder::matrix(double omega, const ComplexModuli& moduli) const {
  ComplexSparse out = inertia_.cast<Complex>();
  fill_matrix(omega, moduli, out);
  return out;
}

Eigen::VectorXcd SystemBuilder::rhs(double omega) const {
  const double g = ops_->boundary_amplitude;
  Eigen::VectorXcd f = ops_->load.cast<Complex>();
  f -= Complex(omega * omega * g) * translation_inertia_.cast<Complex>();
  return f;
}

double SystemBuilder::lifted_rhs_norm(double omega, const ComplexModuli& moduli) const {
  const double g = ops_->boundary_amplitude;
  Eigen::VectorXcd f = ops_->load.cast<Complex>();
  f -= Complex(omega * omega * g) * inertia_lift_.cast<Complex>();
  for (int a = 0; a < num_moduli; ++a)
    if (moduli[a] != Complex(0.0)) f += (g * moduli[a]) * ops_->lift_bending[a].cast<Complex>();
  return f.norm();
}

Eigen::VectorXcd SystemBuilder::state(const Eigen::VectorXcd& deviation) const {
  return deviation + (ops_->boundary_amplitude * translation_).cast<Complex>();
}

struct FrequencySolver::Fallback {
  Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<int>> lu;
  bool ready = false;
};

FrequencySolver::FrequencySolver(const SystemBuilder& builder)
    : builder_(&builder), matrix_(builder.inertia().cast<Complex>()) {
  ldlt_.analyze(matrix_);
}

FrequencySolver::~FrequencySolver() = default;
FrequencySolver::FrequencySolver(FrequencySolver&&) noexcept = default;
FrequencySolver& FrequencySolver::operator=(FrequencySolver&&) noexcept = default;

void FrequencySolver::factorize(double omega, const ComplexModuli& moduli) {
  omega_ = omega;
  moduli_ = moduli;
  if (!stiffness_ready_ || moduli != stiffness_moduli_) {
    builder_->fill_stiffness(moduli, stiffness_);
    stiffness_moduli_ = moduli;
    stiffness_ready_ = true;
  }
  builder_->add_inertia(omega, stiffness_, wide_);
  Complex* v = matrix_.valuePtr();
  for (std::size_t p = 0; p < wide_.re_hi.size(); ++p) v[p] = Complex(wide_.re_hi[p], wide_.im_hi[p]);
  ldlt_ok_ = ldlt_.factorize(matrix_);
  if (fallback_) fallback_->ready = false;
}

Eigen::VectorXcd FrequencySolver::rhs() const { return builder_->rhs(omega_); }

Eigen::VectorXcd FrequencySolver::solve_fallback(const Eigen::VectorXcd& b) const {
  if (!fallback_) fallback_ = std::make_unique<Fallback>();
  if (!fallback_->ready) {
    fallback_->lu.compute(matrix_);
    if (fallback_->lu.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "singular system at omega = " << omega_ << " rad/s (LDL^T pivot ratio "
          << ldlt_.pivot_ratio() << ")";
      throw SolverError(msg.str());
    }
    fallback_->ready = true;
  }
  return fallback_->lu.solve(b);
}

Eigen::VectorXcd FrequencySolver::residual(const Eigen::VectorXcd& b, const Eigen::VectorXcd& x) const {
  const Eigen::Index n = b.size();
  const SparseMatrix& pattern = builder_->inertia();
  const int* outer = pattern.outerIndexPtr();
  const int* inner = pattern.innerIndexPtr();
  const WideValues& w = wide_;
  Eigen::VectorXcd r(n);
  // The pattern is symmetric, so column j gathers row j.
  for (Eigen::Index j = 0; j < n; ++j) {
    long double yr = b[j].real(), yi = b[j].imag();
    for (int p = outer[j]; p < outer[j + 1]; ++p) {
      const long double ar = static_cast<long double>(w.re_hi[p]) + w.re_lo[p];
      const long double ai = static_cast<long double>(w.im_hi[p]) + w.im_lo[p];
      const long double xr = x[inner[p]].real(), xi = x[inner[p]].imag();
      yr -= ar * xr - ai * xi;
      yi -= ar * xi + ai * xr;
    }
    r[j] = Complex(static_cast<double>(yr), static_cast<double>(yi));
  }
  return r;
}

Eigen::VectorXcd FrequencySolver::deviation() const {
  return solve(rhs(), default_tolerance, builder_->lifted_rhs_norm(omega_, moduli_));
}

Eigen::VectorXcd FrequencySolver::solve(const Eigen::VectorXcd& b, double tolerance, double reference_norm) const {
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Eigen::VectorXcd::Zero(b.size());
  const double scale = std::max(bnorm, reference_norm);
  const double limit = tolerance * scale;

  // Refinement against the extended-precision residual converges to the
  // solution of the exact operator combination. A correction of relative size
  // s leaves an error of about s^2, so it stops below sqrt(eps), or once
  // corrections stop shrinking.
  const auto refine = [&](auto&& apply) {
    Eigen::VectorXcd x = apply(b);
    Eigen::VectorXcd r = residual(b, x);
    double previous = std::numeric_limits<double>::infinity();
    for (int step = 0; step < max_refinement_steps; ++step) {
      const Eigen::VectorXcd dx = apply(r);
      const double size = dx.norm();
      if (!(size < previous)) break;
      x += dx;
      r = residual(b, x);
      previous = 0.5 * size;
      if (size <= std::sqrt(std::numeric_limits<double>::epsilon()) * x.norm()) break;
    }
    return std::pair{x, r.norm()};
  };

  if (ldlt_ok_ && !(fallback_ && fallback_->ready)) {
    auto [x, rnorm] = refine([&](const Eigen::VectorXcd& v) { return Eigen::VectorXcd(ldlt_.solve(v)); });
    if (rnorm <= limit) return x;
  }

  auto [x, rnorm] = refine([&](const Eigen::VectorXcd& v) { return solve_fallback(v); });
  if (!(rnorm <= limit)) {
    std::ostringstream msg;
    msg << "ill-conditioned system at omega = " << omega_ << " rad/s: relative residual "
        << rnorm / scale << " (LDL^T pivot ratio " << ldlt_.pivot_ratio() << ")";
    throw SolverError(msg.str());
  }
  return x;
}

Eigen::MatrixXcd FrequencySolver::solve(const Eigen::MatrixXcd& b, double tolerance) const {
  Eigen::MatrixXcd x(b.rows(), b.cols());
  for (Eigen::Index c = 0; c < b.cols(); ++c) x.col(c) = solve(Eigen::VectorXcd(b.col(c)), tolerance);
  return x;
}

Eigen::VectorXcd solve_frequency(const ConstantOperators& ops, const MaterialParams& mat, double omega) {
  mat.validate();
  if (omega < 0.0) throw std::invalid_argument("frequency must be nonnegative");
  SystemBuilder builder(ops);
  FrequencySolver solver(builder);
  solver.factorize(omega, mat);
  return solver.state();
}

double FrequencyResponse::omega(std::size_t k) const { return 2.0 * std::numbers::pi * freqs_hz[k]; }

FrequencyResponse sweep(const ConstantOperators& ops, const MaterialParams& mat,
                        const std::vector<double>& freqs_hz, unsigned threads) {
  mat.validate();
  for (double f : freqs_hz)
    if (!(f >= 0.0)) throw std::invalid_argument("frequencies must be nonnegative");

  FrequencyResponse response;
  response.freqs_hz = freqs_hz;
  response.values.assign(freqs_hz.size(), Complex(0.0));
  if (freqs_hz.empty()) return response;

  const SystemBuilder builder(ops);
  const unsigned workers = worker_count(freqs_hz.size(), threads);
  std::vector<FrequencySolver> solvers;
  solvers.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) solvers.emplace_back(builder);
  const ComplexModuli moduli = mat.complex_moduli();
  const double g = ops.boundary_amplitude;

  parallel_for(freqs_hz.size(), workers, [&](std::size_t k, unsigned w) {
    const double omega = response.omega(k);
    try {
      solvers[w].factorize(omega, moduli);
      const Eigen::VectorXcd u = solvers[w].state();
      response.values[k] = ops.evaluate_probe(u) / g;
    } catch (const SolverError& e) {
      std::ostringstream msg;
      msg << "forward solve failed at " << freqs_hz[k] << " Hz: " << e.what();
      throw SolverError(msg.str());
    }
  });
  return response;
}

std::vector<double> linear_grid(double f_min, double f_max, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = f_min;
    return out;
  }
  for (std::size_t k = 0; k < count; ++k)
    out[k] = k + 1 == count ? f_max : f_min + (f_max - f_min) * static_cast<double>(k) / static_cast<double>(count - 1);
  return out;
}

std::vector<std::size_t> find_peaks(const FrequencyResponse& response) {
  std::vector<std::size_t> peaks;
  for (std::size_t k = 1; k + 1 < response.size(); ++k) {
    const double a = response.amplitude(k);
    if (a > response.amplitude(k - 1) && a > response.amplitude(k + 1)) peaks.push_back(k);
  }
  return peaks;
}

double Mode::frequency_hz() const { return omega / (2.0 * std::numbers::pi); }

ModalResult natural_modes(const ConstantOperators& ops, const MaterialParams& mat, std::size_t count) {
  if (count == 0) throw std::invalid_argument("mode count must be at least 1");
  mat.validate();
  const SystemBuilder builder(ops);
  const Eigen::Index n = static_cast<Eigen::Index>(ops.num_free());
  if (static_cast<Eigen::Index>(count) > n) throw std::invalid_argument("more modes requested than degrees of freedom");

  FrequencySolver solver(builder);
  solver.factorize(0.0, mat);
  const ComplexSparse& stiffness = solver.matrix();
  const ComplexSparse inertia = builder.inertia().cast<Complex>();

  const Eigen::Index want = static_cast<Eigen::Index>(count);
  const Eigen::Index block = std::min<Eigen::Index>(n, std::max<Eigen::Index>(want + 8, 2 * want));

  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Eigen::MatrixXcd x(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = Complex(uniform(rng), 0.0);

  // Normwise backward error |K x - L B x| / ((|K|_1 + |L| |B|_1) |x|).
  auto one_norm = [](const auto& m) {
    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(m.cols());
    for (int c = 0; c < m.outerSize(); ++c)
      for (typename std::decay_t<decltype(m)>::InnerIterator it(m, c); it; ++it) colsum[c] += std::abs(it.value());
    return colsum.maxCoeff();
  };
  const double stiffness_norm = one_norm(stiffness);
  const double inertia_norm = one_norm(inertia);

  constexpr int max_iterations = 300;
  Eigen::VectorXcd ritz, previous;
  Eigen::VectorXd residuals(want);
  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::MatrixXcd y = solver.solve(Eigen::MatrixXcd(inertia * x), 1e-6);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(y);
    const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, block);
    const Eigen::MatrixXcd kq = stiffness * q;
    const Eigen::MatrixXcd bq = inertia * q;
    Eigen::MatrixXcd kr = q.adjoint() * kq;
    Eigen::MatrixXcd br = q.adjoint() * bq;
    br = 0.5 * (br + br.adjoint()).eval();

    // Reduce to a standard problem with the Cholesky factor of the projected
    // inertia.
    Eigen::LLT<Eigen::MatrixXcd> llt(br);
    if (llt.info() != Eigen::Success) throw SolverError("projected inertia matrix is not positive definite");
    const Eigen::MatrixXcd lower = llt.matrixL();
    const Eigen::MatrixXcd reduced =
        lower.triangularView<Eigen::Lower>().solve(
            lower.triangularView<Eigen::Lower>().solve(kr).adjoint()).adjoint();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(reduced);
    if (eig.info() != Eigen::Success) throw SolverError("projected eigenproblem failed");
    const Eigen::MatrixXcd coeffs = lower.adjoint().triangularView<Eigen::Upper>().solve(eig.eigenvectors());

    std::vector<Eigen::Index> order(static_cast<std::size_t>(block));
    for (Eigen::Index i = 0; i < block; ++i) order[static_cast<std::size_t>(i)] = i;
    const Eigen::VectorXcd values = eig.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(values[a]) < std::abs(values[b]); });

    ritz.resize(block);
    Eigen::MatrixXcd sorted(block, block);
    for (Eigen::Index j = 0; j < block; ++j) {
      ritz[j] = values[order[static_cast<std::size_t>(j)]];
      sorted.col(j) = coeffs.col(order[static_cast<std::size_t>(j)]);
    }
    x = q * sorted;
    const Eigen::MatrixXcd kx = kq * sorted;
    const Eigen::MatrixXcd bx = bq * sorted;
    for (Eigen::Index j = 0; j < want; ++j)
      residuals[j] = (kx.col(j) - ritz[j] * bx.col(j)).norm() /
                     ((stiffness_norm + std::abs(ritz[j]) * inertia_norm) * x.col(j).norm());

    bool settled = previous.size() == ritz.size();
    for (Eigen::Index j = 0; settled && j < want; ++j)
      settled = std::abs(ritz[j] - previous[j]) <= 1e-13 * std::abs(ritz[j]);
    previous = ritz;
    if (settled && residuals.maxCoeff() <= 1e-12) break;
  }
  if (!(residuals.maxCoeff() <= 1e-8)) {
    std::ostringstream msg;
    msg << "eigen-solver did not converge: worst backward error " << residuals.maxCoeff();
    throw SolverError(msg.str());
  }

  ModalResult result;
  for (Eigen::Index j = 0; j < want; ++j) {
    Mode mode;
    mode.eigenvalue = ritz[j];
    const Complex root = std::sqrt(ritz[j]);
    mode.omega = root.real();
    mode.decay = root.imag();
    Eigen::VectorXcd shape = x.col(j);
    Eigen::Index imax;
    shape.cwiseAbs().maxCoeff(&imax);
    shape /= shape[imax];
    mode.shape = shape;
    mode.residual = residuals[j];
    result.modes.push_back(std::move(mode));
  }
  std::stable_sort(result.modes.begin(), result.modes.end(),
                   [](const Mode& a, const Mode& b) { return a.omega < b.omega; });
  return result;
}

}  // namespace plateid
