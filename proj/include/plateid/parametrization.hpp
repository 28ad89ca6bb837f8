#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "plateid/forward.hpp"

namespace plateid {

/// First and second derivatives of (D_alpha, beta_alpha) with respect to the
/// parameter vector.
struct MaterialDerivatives {
  std::array<Eigen::VectorXd, num_moduli> storage_grad;
  std::array<Eigen::VectorXd, num_moduli> loss_grad;
  std::array<Eigen::MatrixXd, num_moduli> storage_hess;
  std::array<Eigen::MatrixXd, num_moduli> loss_hess;

  explicit MaterialDerivatives(Eigen::Index k);
  /// Whether modulus `a` depends on the parameters at all.
  bool active(int a) const;
};

/// Maps a low-dimensional parameter vector theta onto material parameters.
class Parametrization {
public:
  virtual ~Parametrization() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::string> labels() const = 0;
  virtual MaterialParams material(const Eigen::VectorXd& theta) const = 0;
  virtual MaterialDerivatives derivatives(const Eigen::VectorXd& theta) const = 0;
  /// Inverse map for starting points and reference values.
  virtual Eigen::VectorXd from_material(const MaterialParams& mat) const = 0;

  Eigen::Index dimension() const { return lower_.size(); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  void set_bounds(Eigen::VectorXd lower, Eigen::VectorXd upper);

  /// Inside the box (strictly, for the trust-region positivity constraint
  /// when `strict`) and mapping to valid material parameters.
  bool feasible(const Eigen::VectorXd& theta, bool strict = true) const;
  /// Feasible and within the physical range of the material model. The
  /// trust-region domain is the wider feasible set.
  virtual bool physical(const Eigen::VectorXd& theta) const { return feasible(theta); }

protected:
  Parametrization(Eigen::VectorXd lower, Eigen::VectorXd upper);

private:
  Eigen::VectorXd lower_, upper_;
};

/// theta = (D, nu, beta): D11 = D22 = D, D12 = nu D, D66 = (1 - nu) D,
/// D16 = D26 = 0, every loss factor equal to beta.
class IsotropicParametrization final : public Parametrization {
public:
  IsotropicParametrization();
  std::string name() const override { return "isotropic"; }
  bool physical(const Eigen::VectorXd& theta) const override;
  std::vector<std::string> labels() const override { return {"D", "nu", "beta"}; }
  MaterialParams material(const Eigen::VectorXd& theta) const override;
  MaterialDerivatives derivatives(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd from_material(const MaterialParams& mat) const override;
};

/// theta = (D, 100 nu) with a fixed loss factor; used by the global search so
/// that both coordinates have comparable spread.
class ScaledIsotropicParametrization final : public Parametrization {
public:
  explicit ScaledIsotropicParametrization(double loss_factor = 0.01);
  std::string name() const override { return "isotropic-scaled"; }
  std::vector<std::string> labels() const override { return {"D", "100nu"}; }
  MaterialParams material(const Eigen::VectorXd& theta) const override;
  MaterialDerivatives derivatives(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd from_material(const MaterialParams& mat) const override;
  double loss_factor() const { return loss_factor_; }

private:
  double loss_factor_;
};

/// theta = (D11, D12, D16, D22, D26, D66, beta11, ..., beta66).
class MonoclinicParametrization final : public Parametrization {
public:
  MonoclinicParametrization();
  std::string name() const override { return "monoclinic"; }
  std::vector<std::string> labels() const override;
  MaterialParams material(const Eigen::VectorXd& theta) const override;
  MaterialDerivatives derivatives(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd from_material(const MaterialParams& mat) const override;
};

std::unique_ptr<Parametrization> make_parametrization(const std::string& name);

/// (theta_i - theta_ref_i) / |theta_ref_i|.
Eigen::VectorXd relative_errors(const Eigen::VectorXd& theta, const Eigen::VectorXd& reference);

}  // namespace plateid
