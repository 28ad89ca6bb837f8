#include "plateid/parametrization.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace plateid {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

int idx(Modulus a) { return static_cast<int>(a); }

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

void check_size(const Eigen::VectorXd& theta, Eigen::Index k) {
  if (theta.size() != k) throw std::invalid_argument("parameter vector has wrong dimension");
}

}  // namespace

MaterialDerivatives::MaterialDerivatives(Eigen::Index k) {
  for (int a = 0; a < num_moduli; ++a) {
    storage_grad[a] = Eigen::VectorXd::Zero(k);
    loss_grad[a] = Eigen::VectorXd::Zero(k);
    storage_hess[a] = Eigen::MatrixXd::Zero(k, k);
    loss_hess[a] = Eigen::MatrixXd::Zero(k, k);
  }
}

bool MaterialDerivatives::active(int a) const {
  return !storage_grad[a].isZero(0.0) || !loss_grad[a].isZero(0.0) || !storage_hess[a].isZero(0.0) ||
         !loss_hess[a].isZero(0.0);
}

Parametrization::Parametrization(Eigen::VectorXd lower, Eigen::VectorXd upper) {
  set_bounds(std::move(lower), std::move(upper));
}

void Parametrization::set_bounds(Eigen::VectorXd lower, Eigen::VectorXd upper) {
  if (lower.size() != upper.size() || (lower.array() > upper.array()).any())
    throw std::invalid_argument("invalid parameter bounds");
  lower_ = std::move(lower);
  upper_ = std::move(upper);
}

bool Parametrization::feasible(const Eigen::VectorXd& theta, bool strict) const {
  if (theta.size() != dimension() || !theta.allFinite()) return false;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (strict ? !(theta[i] > lower_[i] && theta[i] < upper_[i])
               : !(theta[i] >= lower_[i] && theta[i] <= upper_[i]))
      return false;
  }
  try {
    material(theta).validate();
  } catch (const std::invalid_argument&) {
    return false;
  }
  return true;
}

IsotropicParametrization::IsotropicParametrization()
    : Parametrization(vec({0.0, 0.0, 0.0}), vec({inf, inf, inf})) {}

MaterialParams IsotropicParametrization::material(const Eigen::VectorXd& theta) const {
  check_size(theta, 3);
  return MaterialParams::isotropic(theta[0], theta[1], theta[2]);
}

MaterialDerivatives IsotropicParametrization::derivatives(const Eigen::VectorXd& theta) const {
  check_size(theta, 3);
  MaterialDerivatives d(3);
  const double rigidity = theta[0], nu = theta[1];
  d.storage_grad[idx(Modulus::d11)][0] = 1.0;
  d.storage_grad[idx(Modulus::d22)][0] = 1.0;
  d.storage_grad[idx(Modulus::d12)] << nu, rigidity, 0.0;
  d.storage_grad[idx(Modulus::d66)] << 1.0 - nu, -rigidity, 0.0;
  d.storage_hess[idx(Modulus::d12)](0, 1) = d.storage_hess[idx(Modulus::d12)](1, 0) = 1.0;
  d.storage_hess[idx(Modulus::d66)](0, 1) = d.storage_hess[idx(Modulus::d66)](1, 0) = -1.0;
  for (int a = 0; a < num_moduli; ++a) d.loss_grad[a][2] = 1.0;
  return d;
}

Eigen::VectorXd IsotropicParametrization::from_material(const MaterialParams& mat) const {
  const double rigidity = mat.d(Modulus::d11);
  return vec({rigidity, mat.d(Modulus::d12) / rigidity, mat.loss[0]});
}

ScaledIsotropicParametrization::ScaledIsotropicParametrization(double loss_factor)
    : Parametrization(vec({1.0, 0.0}), vec({100.0, 50.0})), loss_factor_(loss_factor) {
  if (!(loss_factor >= 0.0)) throw std::invalid_argument("loss factor must be nonnegative");
}

MaterialParams ScaledIsotropicParametrization::material(const Eigen::VectorXd& theta) const {
  check_size(theta, 2);
  return MaterialParams::isotropic(theta[0], theta[1] / 100.0, loss_factor_);
}

MaterialDerivatives ScaledIsotropicParametrization::derivatives(const Eigen::VectorXd& theta) const {
  check_size(theta, 2);
  MaterialDerivatives d(2);
  const double rigidity = theta[0], nu = theta[1] / 100.0;
  d.storage_grad[idx(Modulus::d11)][0] = 1.0;
  d.storage_grad[idx(Modulus::d22)][0] = 1.0;
  d.storage_grad[idx(Modulus::d12)] << nu, rigidity / 100.0;
  d.storage_grad[idx(Modulus::d66)] << 1.0 - nu, -rigidity / 100.0;
  d.storage_hess[idx(Modulus::d12)](0, 1) = d.storage_hess[idx(Modulus::d12)](1, 0) = 0.01;
  d.storage_hess[idx(Modulus::d66)](0, 1) = d.storage_hess[idx(Modulus::d66)](1, 0) = -0.01;
  return d;
}

Eigen::VectorXd ScaledIsotropicParametrization::from_material(const MaterialParams& mat) const {
  const double rigidity = mat.d(Modulus::d11);
  return vec({rigidity, 100.0 * mat.d(Modulus::d12) / rigidity});
}

MonoclinicParametrization::MonoclinicParametrization()
    : Parametrization(vec({0.0, -inf, -inf, 0.0, -inf, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}),
                      Eigen::VectorXd::Constant(12, inf)) {}

std::vector<std::string> MonoclinicParametrization::labels() const {
  std::vector<std::string> out;
  for (const char* n : modulus_names) out.push_back(std::string("D") + n);
  for (const char* n : modulus_names) out.push_back(std::string("beta") + n);
  return out;
}

MaterialParams MonoclinicParametrization::material(const Eigen::VectorXd& theta) const {
  check_size(theta, 12);
  MaterialParams m;
  for (int a = 0; a < num_moduli; ++a) {
    m.storage[a] = theta[a];
    m.loss[a] = theta[num_moduli + a];
  }
  return m;
}

MaterialDerivatives MonoclinicParametrization::derivatives(const Eigen::VectorXd& theta) const {
  check_size(theta, 12);
  MaterialDerivatives d(12);
  for (int a = 0; a < num_moduli; ++a) {
    d.storage_grad[a][a] = 1.0;
    d.loss_grad[a][num_moduli + a] = 1.0;
  }
  return d;
}

Eigen::VectorXd MonoclinicParametrization::from_material(const MaterialParams& mat) const {
  Eigen::VectorXd theta(12);
  for (int a = 0; a < num_moduli; ++a) {
    theta[a] = mat.storage[a];
    theta[num_moduli + a] = mat.loss[a];
  }
  return theta;
}

std::unique_ptr<Parametrization> make_parametrization(const std::string& name) {
  if (name == "isotropic") return std::make_unique<IsotropicParametrization>();
  if (name == "isotropic-scaled") return std::make_unique<ScaledIsotropicParametrization>();
  if (name == "monoclinic") return std::make_unique<MonoclinicParametrization>();
  throw std::invalid_argument("unknown parametrization '" + name + "'");
}

bool IsotropicParametrization::physical(const Eigen::VectorXd& theta) const {
  return feasible(theta) && theta[1] < 0.5;
}

Eigen::VectorXd relative_errors(const Eigen::VectorXd& theta, const Eigen::VectorXd& reference) {
  if (theta.size() != reference.size()) throw std::invalid_argument("relative_errors: size mismatch");
  return (theta - reference).array() / reference.array().abs();
}

}  // namespace plateid
