#include "plateid/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "plateid/parallel.hpp"

namespace plateid {

namespace {

// Real sparse matrix times complex vector.
Eigen::VectorXcd multiply(const SparseMatrix& a, const Eigen::VectorXcd& x) {
  Eigen::VectorXcd out(a.rows());
  out.real() = a * x.real();
  out.imag() = a * x.imag();
  return out;
}

// Residual bound for adjoint and second-order solves; their right-hand sides
// (probe weights, load derivatives) are far sparser than the state load.
constexpr double derivative_tolerance = 1e-8;

// Unconjugated bilinear product x^T y.
Complex bilinear(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) { return x.cwiseProduct(y).sum(); }

}  // namespace

void ReferenceData::validate() const {
  if (freqs_hz.size() != values.size()) throw std::invalid_argument("reference data: frequency/value count mismatch");
  if (values.empty()) throw std::invalid_argument("reference data is empty");
  for (double f : freqs_hz)
    if (!(f >= 0.0) || !std::isfinite(f)) throw std::invalid_argument("reference data: invalid frequency");
  for (const Complex& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("reference data: non-finite AFC value");
}

double add_noise(std::vector<Complex>& values, double percent, std::uint64_t seed) {
  if (!(percent >= 0.0)) throw std::invalid_argument("noise level must be nonnegative");
  if (percent == 0.0 || values.empty()) return 0.0;
  double peak = 0.0;
  for (const Complex& v : values) peak = std::max(peak, std::abs(v));
  const double sigma = percent / 100.0 * peak;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (Complex& v : values) {
    const double re = normal(rng);
    const double im = normal(rng);
    v += Complex(re, im);
  }
  return sigma;
}

ReferenceData synthesize_data(const ConstantOperators& ops, const MaterialParams& mat,
                              const std::vector<double>& freqs_hz, double noise_percent, std::uint64_t seed,
                              unsigned threads) {
  FrequencyResponse response = sweep(ops, mat, freqs_hz, threads);
  ReferenceData data;
  data.freqs_hz = std::move(response.freqs_hz);
  data.values = std::move(response.values);
  data.noise_level = noise_percent;
  data.seed = seed;
  add_noise(data.values, noise_percent, seed);
  return data;
}

class LossFunction::SolverPool {
public:
  explicit SolverPool(const SystemBuilder& builder) : builder_(&builder) {}

  std::vector<std::unique_ptr<FrequencySolver>> acquire(unsigned count) {
    std::vector<std::unique_ptr<FrequencySolver>> out;
    {
      std::lock_guard lock(mutex_);
      while (out.size() < count && !idle_.empty()) {
        out.push_back(std::move(idle_.back()));
        idle_.pop_back();
      }
    }
    while (out.size() < count) out.push_back(std::make_unique<FrequencySolver>(*builder_));
    return out;
  }

  void release(std::vector<std::unique_ptr<FrequencySolver>>& solvers) {
    std::lock_guard lock(mutex_);
    for (auto& s : solvers) idle_.push_back(std::move(s));
    solvers.clear();
  }

private:
  const SystemBuilder* builder_;
  std::mutex mutex_;
  std::vector<std::unique_ptr<FrequencySolver>> idle_;
};

LossFunction::LossFunction(const ConstantOperators& ops, const Parametrization& param, ReferenceData data,
                           unsigned threads)
    : ops_(&ops), param_(&param), data_(std::move(data)), threads_(threads), builder_(ops),
      pool_(std::make_unique<SolverPool>(builder_)) {
  data_.validate();
}

LossFunction::~LossFunction() = default;

std::vector<PointSensitivity> LossFunction::sensitivities(const Eigen::VectorXd& theta, int order) const {
  if (order < 0 || order > 2) throw std::invalid_argument("derivative order must be 0, 1 or 2");
  const MaterialParams mat = param_->material(theta);
  mat.validate();
  const ComplexModuli moduli = mat.complex_moduli();
  const Eigen::Index k = param_->dimension();
  const double g = ops_->boundary_amplitude;

  // d a_alpha / d theta_j and d2 a_alpha / d theta_j d theta_l with
  // a_alpha = D_alpha (1 + i beta_alpha).
  std::vector<int> active;
  std::vector<Eigen::VectorXcd> da;
  std::vector<Eigen::MatrixXcd> dda;
  if (order >= 1) {
    const MaterialDerivatives d = param_->derivatives(theta);
    const Complex i1(0.0, 1.0);
    for (int a = 0; a < num_moduli; ++a) {
      if (!d.active(a)) continue;
      active.push_back(a);
      const double dval = mat.storage[a], beta = mat.loss[a];
      da.push_back(d.storage_grad[a].cast<Complex>() * Complex(1.0, beta) +
                   i1 * dval * d.loss_grad[a].cast<Complex>());
      if (order >= 2) {
        const Eigen::MatrixXd cross = d.storage_grad[a] * d.loss_grad[a].transpose();
        dda.push_back(d.storage_hess[a].cast<Complex>() * Complex(1.0, beta) +
                      i1 * (cross + cross.transpose()).cast<Complex>() +
                      i1 * dval * d.loss_hess[a].cast<Complex>());
      }
    }
  }
  const std::size_t na = active.size();
  const Eigen::VectorXcd probe = ops_->probe.cast<Complex>();

  const std::size_t n = data_.size();
  std::vector<PointSensitivity> out(n);
  const unsigned workers = worker_count(n, threads_);
  auto solvers = pool_->acquire(workers);
  try {
    parallel_for(n, workers, [&](std::size_t f, unsigned w) {
      FrequencySolver& solver = *solvers[w];
      const double omega = 2.0 * std::numbers::pi * data_.freqs_hz[f];
      PointSensitivity& ps = out[f];
      try {
        solver.factorize(omega, moduli);
        const Eigen::VectorXcd v = solver.deviation();
        ps.value = ops_->evaluate_probe(builder_.state(v)) / g;
        if (order == 0) return;

        // Adjoint: K is complex symmetric, so K^{-T} c = K^{-1} c.
        const Eigen::VectorXcd lambda = solver.solve(probe, derivative_tolerance);
        std::vector<Eigen::VectorXcd> wv(na);
        Eigen::VectorXcd s(static_cast<Eigen::Index>(na));
        for (std::size_t i = 0; i < na; ++i) {
          const int a = active[i];
          // d(K u - f)/d a_alpha = K^alpha u - g f^alpha = K^alpha v.
          wv[i] = multiply(ops_->bending[a], v);
          s[static_cast<Eigen::Index>(i)] = bilinear(lambda, wv[i]);
        }
        ps.gradient = Eigen::VectorXcd::Zero(k);
        for (std::size_t i = 0; i < na; ++i) ps.gradient -= da[i] * s[static_cast<Eigen::Index>(i)];
        ps.gradient /= g;
        if (order == 1) return;

        // T(a, b) = (K^a lambda)^T K^{-1} w_b.
        Eigen::MatrixXcd wmat(v.size(), static_cast<Eigen::Index>(na));
        for (std::size_t i = 0; i < na; ++i) wmat.col(static_cast<Eigen::Index>(i)) = wv[i];
        const Eigen::MatrixXcd z = solver.solve(wmat, derivative_tolerance);
        Eigen::MatrixXcd t(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(na));
        for (std::size_t i = 0; i < na; ++i) {
          const Eigen::VectorXcd q = multiply(ops_->bending[active[i]], lambda);
          for (std::size_t j = 0; j < na; ++j)
            t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = bilinear(q, z.col(static_cast<Eigen::Index>(j)));
        }
        Eigen::MatrixXcd dadt(static_cast<Eigen::Index>(na), k);  // row i: d a_i / d theta
        for (std::size_t i = 0; i < na; ++i) dadt.row(static_cast<Eigen::Index>(i)) = da[i].transpose();
        const Eigen::MatrixXcd mixed = dadt.transpose() * t * dadt;
        ps.hessian = mixed + mixed.transpose();
        for (std::size_t i = 0; i < na; ++i) ps.hessian -= dda[i] * s[static_cast<Eigen::Index>(i)];
        ps.hessian /= g;
      } catch (const SolverError& e) {
        std::ostringstream msg;
        msg << "solve failed at " << data_.freqs_hz[f] << " Hz: " << e.what();
        throw SolverError(msg.str());
      }
    });
  } catch (...) {
    pool_->release(solvers);
    throw;
  }
  pool_->release(solvers);
  return out;
}

std::vector<Complex> LossFunction::predict(const Eigen::VectorXd& theta) const {
  const auto points = sensitivities(theta, 0);
  std::vector<Complex> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = points[i].value;
  return out;
}

LossValue LossFunction::evaluate(const Eigen::VectorXd& theta, int order) const {
  const auto points = sensitivities(theta, order);
  ++evaluations_;
  const Eigen::Index k = param_->dimension();
  const double scale = 1.0 / static_cast<double>(points.size());
  LossValue out;
  if (order >= 1) out.gradient = Eigen::VectorXd::Zero(k);
  if (order >= 2) out.hessian = Eigen::MatrixXd::Zero(k, k);
  // Fixed summation order keeps the result independent of the thread count.
  for (std::size_t f = 0; f < points.size(); ++f) {
    const PointSensitivity& ps = points[f];
    const Complex r = ps.value - data_.values[f];
    out.value += std::norm(r);
    if (order >= 1) out.gradient += (std::conj(r) * ps.gradient).real();
    if (order >= 2)
      out.hessian += (ps.gradient.conjugate() * ps.gradient.transpose() + std::conj(r) * ps.hessian).real();
  }
  out.value *= scale;
  if (order >= 1) out.gradient *= 2.0 * scale;
  if (order >= 2) out.hessian *= 2.0 * scale;
  return out;
}

namespace {

// max_j |a_j - b_j| / (|b_j| + floor * max|b|).
double scaled_discrepancy(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor) {
  const double scale = floor * b.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::abs(b.data()[i]) + scale;
    const double diff = std::abs(a.data()[i] - b.data()[i]);
    worst = std::max(worst, denom > 0.0 ? diff / denom : diff);
  }
  return worst;
}

}  // namespace

DerivativeCheck check_derivatives(const LossFunction& loss, const Eigen::VectorXd& theta, double relative_step) {
  const Eigen::Index k = theta.size();
  DerivativeCheck out;
  const LossValue exact = loss.evaluate(theta, 2);
  out.value = exact.value;
  out.gradient = exact.gradient;
  out.hessian = exact.hessian;
  out.fd_gradient.resize(k);
  out.fd_hessian.resize(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double h = relative_step * (theta[j] != 0.0 ? std::abs(theta[j]) : 1.0);
    // Fourth-order central stencil.
    LossValue f[4];
    const double offsets[4] = {2.0, 1.0, -1.0, -2.0};
    for (int s = 0; s < 4; ++s) {
      Eigen::VectorXd shifted = theta;
      shifted[j] += offsets[s] * h;
      f[s] = loss.evaluate(shifted, 1);
    }
    out.fd_gradient[j] = (-f[0].value + 8.0 * f[1].value - 8.0 * f[2].value + f[3].value) / (12.0 * h);
    out.fd_hessian.col(j) = (-f[0].gradient + 8.0 * f[1].gradient - 8.0 * f[2].gradient + f[3].gradient) / (12.0 * h);
  }
  out.gradient_discrepancy = scaled_discrepancy(out.gradient, out.fd_gradient, 1e-6);
  out.hessian_discrepancy = scaled_discrepancy(out.hessian, out.fd_hessian, 1e-6);
  const double hnorm = out.hessian.norm();
  out.hessian_asymmetry = hnorm > 0.0 ? (out.hessian - out.hessian.transpose()).norm() / hnorm : 0.0;
  return out;
}

Objective LossFunction::objective() const {
  Objective obj;
  obj.evaluate = [this](const Eigen::VectorXd& theta, int order) { return evaluate(theta, order); };
  obj.feasible = [this](const Eigen::VectorXd& theta) { return param_->feasible(theta); };
  return obj;
}

}  // namespace plateid
