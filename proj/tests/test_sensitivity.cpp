#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "plateid/sensitivity.hpp"
#include "support.hpp"

namespace plateid {
namespace {

// Reduced grid that still spans the first three resonances.
std::vector<double> short_grid() { return linear_grid(10, 1000, 41); }

const ReferenceData& noisy_data() {
  static const ReferenceData data =
      synthesize_data(testing::table_operators(), testing::table_material(), short_grid(), 1.0, 7);
  return data;
}

const ReferenceData& clean_data() {
  static const ReferenceData data =
      synthesize_data(testing::table_operators(), testing::table_material(), short_grid(), 0.0, 7);
  return data;
}

TEST(Loss, VanishesOnSelfConsistentData) {
  const IsotropicParametrization param;
  const LossFunction loss(testing::table_operators(), param, clean_data());
  EXPECT_LT(loss.value(testing::table_theta()), 1e-20);
}

TEST(Loss, UnitOffsetAtOneFrequencyGivesUnitLoss) {
  const IsotropicParametrization param;
  ReferenceData one;
  one.freqs_hz = {437.0};
  const Complex p = LossFunction(testing::table_operators(), param, [] {
                      ReferenceData d;
                      d.freqs_hz = {437.0};
                      d.values = {Complex(0.0)};
                      return d;
                    }()).predict(testing::table_theta())[0];
  one.values = {p + 1.0};
  const LossFunction loss(testing::table_operators(), param, one);
  EXPECT_NEAR(loss.value(testing::table_theta()), 1.0, 1e-10);
}

TEST(Loss, WrongRigidityIncreasesLoss) {
  const IsotropicParametrization param;
  const LossFunction loss(testing::table_operators(), param, noisy_data());
  Eigen::VectorXd off = testing::table_theta();
  off[0] *= 1.2;
  EXPECT_GT(loss.value(off), loss.value(testing::table_theta()));
}

TEST(Loss, PredictionMatchesIndependentSolves) {
  const IsotropicParametrization param;
  const LossFunction loss(testing::table_operators(), param, noisy_data());
  const auto predicted = loss.predict(testing::table_theta());
  const auto with_derivatives = loss.sensitivities(testing::table_theta(), 2);
  for (std::size_t k = 0; k < predicted.size(); k += 5) {
    const double omega = 2 * std::numbers::pi * noisy_data().freqs_hz[k];
    const Complex fresh = testing::table_operators().evaluate_probe(
        solve_frequency(testing::table_operators(), testing::table_material(), omega));
    EXPECT_LT(std::abs(predicted[k] - fresh), 1e-12 * std::abs(fresh)) << k;
    EXPECT_LT(std::abs(with_derivatives[k].value - predicted[k]), 1e-12 * std::abs(fresh)) << k;
  }
}

TEST(Loss, InvariantUnderPermutationOfSamples) {
  const IsotropicParametrization param;
  ReferenceData shuffled = noisy_data();
  std::vector<std::size_t> order(shuffled.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(3));
  for (std::size_t k = 0; k < order.size(); ++k) {
    shuffled.freqs_hz[k] = noisy_data().freqs_hz[order[k]];
    shuffled.values[k] = noisy_data().values[order[k]];
  }
  const LossFunction a(testing::table_operators(), param, noisy_data());
  const LossFunction b(testing::table_operators(), param, shuffled);
  Eigen::VectorXd theta = testing::table_theta();
  theta[1] = 0.3;
  const LossValue va = a.evaluate(theta, 2), vb = b.evaluate(theta, 2);
  EXPECT_NEAR(va.value, vb.value, 1e-13 * va.value);
  EXPECT_LT((va.gradient - vb.gradient).norm(), 1e-12 * va.gradient.norm());
  EXPECT_LT((va.hessian - vb.hessian).norm(), 1e-12 * va.hessian.norm());
}

TEST(Loss, IndependentOfThreadCount) {
  const IsotropicParametrization param;
  const LossFunction serial(testing::table_operators(), param, noisy_data(), 1);
  const LossFunction parallel(testing::table_operators(), param, noisy_data(), 3);
  const LossValue a = serial.evaluate(testing::table_theta(), 2), b = parallel.evaluate(testing::table_theta(), 2);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.gradient, b.gradient);
  EXPECT_EQ(a.hessian, b.hessian);
}

TEST(Loss, RejectsBadInput) {
  const IsotropicParametrization param;
  EXPECT_THROW(LossFunction(testing::table_operators(), param, ReferenceData{}), std::invalid_argument);
  const LossFunction loss(testing::table_operators(), param, noisy_data());
  EXPECT_THROW(loss.evaluate(testing::table_theta(), 3), std::invalid_argument);
  EXPECT_THROW(loss.value(Eigen::Vector3d(-1.0, 0.3, 0.01)), std::invalid_argument);
  const Objective obj = loss.objective();
  EXPECT_FALSE(obj.feasible(Eigen::Vector3d(-1.0, 0.3, 0.01)));
  EXPECT_TRUE(obj.feasible(testing::table_theta()));
}

TEST(Gradient, VanishesAtNoiselessMinimum) {
  const IsotropicParametrization param;
  const LossFunction loss(testing::table_operators(), param, clean_data());
  const LossValue v = loss.evaluate(testing::table_theta(), 2);
  // Scale: gradient of the same loss a small step away.
  Eigen::VectorXd off = testing::table_theta();
  off[0] *= 1.001;
  const double scale = loss.evaluate(off, 1).gradient.norm();
  EXPECT_LT(v.gradient.norm(), 1e-8 * scale);
}

TEST(Gradient, LossFactorSlopeHasExpectedSign) {
  const IsotropicParametrization param;
  const LossFunction loss(testing::table_operators(), param, clean_data());
  Eigen::VectorXd theta = testing::table_theta();
  theta[2] = 2 * testing::table_loss;
  EXPECT_GT(loss.evaluate(theta, 1).gradient[2], 0.0);
  theta[2] = 0.5 * testing::table_loss;
  EXPECT_LT(loss.evaluate(theta, 1).gradient[2], 0.0);
}

TEST(Hessian, PositiveSemidefiniteAtNoiselessMinimum) {
  const IsotropicParametrization param;
  const LossFunction loss(testing::table_operators(), param, clean_data());
  const Eigen::MatrixXd h = loss.evaluate(testing::table_theta(), 2).hessian;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * eig.eigenvalues().cwiseAbs().maxCoeff());
}

struct DerivativeCase {
  std::string name;
  std::vector<Eigen::VectorXd> points;
};

std::vector<DerivativeCase> derivative_cases() {
  std::mt19937_64 rng(2024);
  DerivativeCase iso{"isotropic", {testing::table_theta()}};
  DerivativeCase scaled{"isotropic_scaled", {Eigen::Vector2d(17.97, 28.6)}};
  DerivativeCase mono{"monoclinic", {}};
  for (int i = 0; i < 5; ++i) {
    const double d = testing::uniform(rng, 12.0, 25.0), nu = testing::uniform(rng, 0.15, 0.45);
    iso.points.push_back(Eigen::Vector3d(d, nu, testing::uniform(rng, 0.001, 0.03)));
    scaled.points.push_back(Eigen::Vector2d(d, 100 * nu));
  }
  Eigen::VectorXd m(12);
  m << 17.97, 5.1, 0.4, 15.0, -0.3, 6.4, 0.003, 0.004, 0.01, 0.002, 0.02, 0.005;
  mono.points.push_back(m);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd q = m;
    for (int a = 0; a < 6; ++a) q[a] *= testing::uniform(rng, 0.9, 1.1);
    for (int a = 6; a < 12; ++a) q[a] = testing::uniform(rng, 0.001, 0.03);
    mono.points.push_back(q);
  }
  return {iso, scaled, mono};
}

void PrintTo(const DerivativeCase& c, std::ostream* os) { *os << c.name; }

class DerivativeTest : public ::testing::TestWithParam<DerivativeCase> {};

TEST_P(DerivativeTest, ExactDerivativesMatchFiniteDifferences) {
  std::string name = GetParam().name;
  std::replace(name.begin(), name.end(), '_', '-');
  const auto param = make_parametrization(name);
  const LossFunction loss(testing::table_operators(), *param, noisy_data());
  for (const Eigen::VectorXd& theta : GetParam().points) {
    ASSERT_TRUE(param->feasible(theta));
    const DerivativeCheck c = check_derivatives(loss, theta);
    EXPECT_LT(c.gradient_discrepancy, 1e-5) << theta.transpose();
    EXPECT_LT(c.hessian_discrepancy, 1e-4) << theta.transpose();
    EXPECT_LT(c.hessian_asymmetry, 1e-10) << theta.transpose();
  }
}

INSTANTIATE_TEST_SUITE_P(All, DerivativeTest, ::testing::ValuesIn(derivative_cases()),
                         [](const auto& info) { return info.param.name; });

TEST(Noise, StandardDeviationMatchesLevel) {
  std::vector<Complex> values(4000, Complex(2.0, 0.0));
  const double sigma = add_noise(values, 5.0, 11);
  EXPECT_DOUBLE_EQ(sigma, 0.1);
  double sum = 0.0, sq = 0.0;
  for (const Complex& v : values)
    for (double r : {v.real() - 2.0, v.imag()}) {
      sum += r;
      sq += r * r;
    }
  const double n = 2.0 * static_cast<double>(values.size());
  const double std = std::sqrt(sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(std, sigma, 0.2 * sigma);
}

TEST(Noise, SeededAndOptional) {
  std::vector<Complex> a(50, Complex(1.0)), b(50, Complex(1.0)), c(50, Complex(1.0));
  add_noise(a, 3.0, 5);
  add_noise(b, 3.0, 5);
  add_noise(c, 3.0, 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  std::vector<Complex> d(5, Complex(1.0));
  EXPECT_EQ(add_noise(d, 0.0, 5), 0.0);
  EXPECT_EQ(d, std::vector<Complex>(5, Complex(1.0)));
  EXPECT_THROW(add_noise(d, -1.0, 5), std::invalid_argument);
}

TEST(Synthesize, DeterministicAcrossThreadCounts) {
  const auto freqs = linear_grid(0, 600, 13);
  const ReferenceData a = synthesize_data(testing::table_operators(), testing::table_material(), freqs, 1.0, 9, 1);
  const ReferenceData b = synthesize_data(testing::table_operators(), testing::table_material(), freqs, 1.0, 9, 3);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.noise_level, 1.0);
  EXPECT_EQ(a.seed, 9u);
}

}  // namespace
}  // namespace plateid
