// Acceptance criteria of the toolkit, one line per criterion:
//   criterion <n> <PASS|FAIL>: <measured values>
// Run with criterion numbers as arguments to select a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "plateid/config.hpp"
#include "plateid/differential_evolution.hpp"
#include "plateid/fit.hpp"
#include "plateid/sensitivity.hpp"
#include "plateid/trust_region.hpp"

namespace {

using namespace plateid;
using Clock = std::chrono::steady_clock;

constexpr double steel_density = 7920.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

MaterialParams table_material() { return MaterialParams::isotropic(17.97, 0.286, 0.003); }
Eigen::VectorXd table_theta() { return Eigen::Vector3d(17.97, 0.286, 0.003); }

ConstantOperators table_operators(GeometryConfig cfg = {}) {
  return assemble(generate_strip_mesh(cfg), cfg, steel_density);
}

std::string vec(const Eigen::VectorXd& v) {
  std::ostringstream s;
  s.precision(3);
  s << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  s << ')';
  return s.str();
}

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

RunConfig shipped_config(const std::string& name) {
  return load_config(std::filesystem::path(PLATEID_SOURCE_DIR) / "configs" / name);
}

Outcome rigidity_formula() {
  const double d = flexural_rigidity(198e9, 0.286, 0.5e-3);
  return {std::abs(d - 17.97) <= 1e-3 * 17.97, "D = " + num(d, 6) + " N m"};
}

Outcome first_frequency_without_accelerometer() {
  const auto start = Clock::now();
  GeometryConfig cfg;
  cfg.accel_mass = 0.0;
  const ConstantOperators ops = table_operators(cfg);
  const double f1 = natural_modes(ops, table_material(), 1).modes[0].frequency_hz();
  const double t = seconds_since(start);
  return {f1 >= 80.0 && f1 <= 88.0 && t < 10.0, "f1 = " + num(f1, 5) + " Hz in " + num(t, 3) + " s"};
}

Outcome mesh_convergence() {
  GeometryConfig fine;
  fine.nx = 100;
  fine.ny = 20;
  const ModalResult a = natural_modes(table_operators(), table_material(), 3);
  const ModalResult b = natural_modes(table_operators(fine), table_material(), 3);
  double worst = 0.0;
  std::string detail = "relative changes";
  for (std::size_t i = 0; i < 3; ++i) {
    const double c = std::abs(a.modes[i].frequency_hz() - b.modes[i].frequency_hz()) / b.modes[i].frequency_hz();
    worst = std::max(worst, c);
    detail += " " + num(c, 3);
  }
  return {worst < 5e-3, detail};
}

Outcome static_limit_and_realness() {
  const ConstantOperators ops = table_operators();
  const Complex p0 = ops.evaluate_probe(solve_frequency(ops, table_material(), 0.0));
  const double static_error = std::abs(p0 - Complex(1.0, 0.0));
  const MaterialParams undamped = MaterialParams::isotropic(17.97, 0.286, 0.0);
  const ModalResult modes = natural_modes(ops, undamped, 6);
  double worst_imag = 0.0;
  for (double f : linear_grid(10, 1500, 150)) {
    bool near = false;
    for (const Mode& m : modes.modes) near |= std::abs(m.frequency_hz() - f) < 0.02 * m.frequency_hz();
    if (near) continue;
    const Eigen::VectorXcd u = solve_frequency(ops, undamped, 2 * std::numbers::pi * f);
    worst_imag = std::max(worst_imag, u.imag().cwiseAbs().maxCoeff());
  }
  return {static_error <= 1e-10 && worst_imag < 1e-10,
          "|AFC(0) - 1| = " + num(static_error, 3) + ", max |Im u| = " + num(worst_imag, 3)};
}

Outcome peak_counts() {
  const ConstantOperators ops = table_operators();
  const std::map<double, std::size_t> expected = {{200, 1}, {600, 2}, {1000, 3}, {1500, 4}};
  bool pass = true;
  std::string detail;
  for (const auto& [fmax, count] : expected) {
    const std::size_t got = find_peaks(sweep(ops, table_material(), linear_grid(0, fmax, 201))).size();
    pass &= got == count;
    detail += (detail.empty() ? "" : ", ") + num(fmax) + " Hz: " + std::to_string(got);
  }
  return {pass, "peaks " + detail};
}

Outcome derivative_accuracy() {
  const auto start = Clock::now();
  const ConstantOperators ops = table_operators();
  const IsotropicParametrization param;
  const ReferenceData data = synthesize_data(ops, table_material(), linear_grid(10, 1000, 201), 1.0, 7);
  const LossFunction loss(ops, param, data);
  std::vector<Eigen::VectorXd> points = {table_theta()};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> d(12.0, 25.0), nu(0.15, 0.45), beta(0.001, 0.03);
  for (int i = 0; i < 5; ++i) points.push_back(Eigen::Vector3d(d(rng), nu(rng), beta(rng)));
  double grad = 0.0, hess = 0.0, asym = 0.0;
  for (const Eigen::VectorXd& theta : points) {
    const DerivativeCheck c = check_derivatives(loss, theta);
    grad = std::max(grad, c.gradient_discrepancy);
    hess = std::max(hess, c.hessian_discrepancy);
    asym = std::max(asym, c.hessian_asymmetry);
  }
  const double t = seconds_since(start);
  return {grad < 1e-5 && hess < 1e-4 && asym < 1e-10 && t < 60.0,
          "gradient " + num(grad, 3) + ", Hessian " + num(hess, 3) + ", asymmetry " + num(asym, 3) + " over " +
              std::to_string(points.size()) + " points in " + num(t, 3) + " s"};
}

Outcome local_fit() {
  const auto start = Clock::now();
  const RunConfig cfg = shipped_config("local_0pct_600.ini");
  const ConstantOperators ops = assemble(generate_strip_mesh(cfg.geometry), cfg.geometry, cfg.density);
  const IsotropicParametrization param;
  const ReferenceData data =
      synthesize_data(ops, cfg.reference, cfg.frequencies(), cfg.noise_level, cfg.noise_seed, cfg.threads);
  const LossFunction loss(ops, param, data, cfg.threads);
  const FitResult fit = fit_local(loss, cfg.initial_point(param), cfg.trust_region, param.from_material(cfg.reference));
  const double t = seconds_since(start);
  bool monotone = true;
  const auto& trace = fit.stages.front().trace;
  for (std::size_t i = 1; i < trace.size(); ++i) monotone &= trace[i].loss <= trace[i - 1].loss;
  const Eigen::Vector3d limits(1e-3, 1e-2, 1e-4);
  const bool within = (fit.relative_errors.cwiseAbs().array() <= limits.array()).all();
  return {monotone && within && t < 300.0, "relative errors " + vec(fit.relative_errors) + ", " +
                                               std::to_string(fit.iterations) + " iterations, " +
                                               (monotone ? "monotone" : "NOT monotone") + ", " + num(t, 3) + " s"};
}

Outcome global_fit() {
  const Eigen::Vector3d published(-2.8e-5, -1.1e-3, 4.5e-3);
  bool pass = true;
  std::string detail;
  for (const char* name : {"global_0pct_1000.ini", "global_1pct_1000.ini"}) {
    const auto start = Clock::now();
    const RunConfig cfg = shipped_config(name);
    const ConstantOperators ops = assemble(generate_strip_mesh(cfg.geometry), cfg.geometry, cfg.density);
    const ReferenceData data =
        synthesize_data(ops, cfg.reference, cfg.frequencies(), cfg.noise_level, cfg.noise_seed, cfg.threads);
    const IsotropicParametrization local;
    const FitResult fit = fit_global(ops, data, cfg.global, local.from_material(cfg.reference));
    const double t = seconds_since(start);
    const Eigen::ArrayXd e = fit.relative_errors.cwiseAbs().array();
    const bool ok = cfg.noise_level == 0.0 ? (e < 1e-6).all() : (e <= 10.0 * published.cwiseAbs().array()).all();
    pass &= ok && t < 1800.0;
    detail += (detail.empty() ? "" : "; ") + num(cfg.noise_level) + "% noise: errors " + vec(fit.relative_errors) +
              " (DE " + vec(fit.global_relative_errors) + ", " + std::to_string(fit.value_evaluations) +
              " evaluations) in " + num(t, 4) + " s";
  }
  return {pass, detail};
}

Outcome optimizer_units() {
  // Trust region on a convex quadratic.
  Eigen::Matrix3d a;
  a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  const Eigen::Vector3d b(1, -2, 3);
  Objective quad;
  quad.evaluate = [&](const Eigen::VectorXd& x, int order) {
    ObjectiveValue v;
    v.value = 0.5 * x.dot(a * x) - b.dot(x);
    if (order >= 1) v.gradient = a * x - b;
    if (order >= 2) v.hessian = a;
    return v;
  };
  TrustRegionOptions tr;
  tr.delta0 = 10.0;
  tr.gradient_tolerance = 1e-12;
  const OptimizationResult q = trust_region_minimize(quad, Eigen::Vector3d(5, -5, 5), tr);
  const bool tr_ok = q.iterations <= 3 && (a * q.x - b).norm() < 1e-12;

  // Subproblem against a polar grid on an indefinite model.
  const Eigen::Vector2d g(1.0, 1.0);
  const Eigen::Matrix2d h = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  double sub_gap = 0.0;
  for (double delta : {0.3, 1.0, 2.5}) {
    double grid = 0.0;
    for (int i = 1; i <= 800; ++i)
      for (int j = 0; j < 3600; ++j) {
        const double r = delta * i / 800, t = 2 * std::numbers::pi * j / 3600;
        grid = std::min(grid, model_decrease(g, h, Eigen::Vector2d(r * std::cos(t), r * std::sin(t))));
      }
    sub_gap = std::max(sub_gap, std::abs(model_decrease(g, h, solve_tr_subproblem(g, h, delta).step) - grid));
  }

  // Differential evolution on a sphere.
  const Eigen::Vector2d lo(-5, -5), hi(5, 5), center(1.5, -2.0);
  bool inside = true;
  auto sphere = [&](const Eigen::VectorXd& x) {
    inside &= (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    return (x - center).squaredNorm();
  };
  DEOptions de;
  de.population = 20;
  de.max_evaluations = 2000;
  de.tolerance = 0.0;
  const DEResult r1 = differential_evolution(sphere, lo, hi, de, 3);
  const DEResult r2 = differential_evolution(sphere, lo, hi, de, 3);
  const OptimizationResult q2 = trust_region_minimize(quad, Eigen::Vector3d(5, -5, 5), tr);
  const bool deterministic = r1.best == r2.best && r1.best_value == r2.best_value && q.x == q2.x;
  const bool de_ok = r1.best_value < 1e-3 && r1.evaluations <= 2000 && inside;
  return {tr_ok && sub_gap <= 1e-4 && de_ok && deterministic,
          "quadratic in " + std::to_string(q.iterations) + " iterations, subproblem gap " + num(sub_gap, 3) +
              ", DE sphere " + num(r1.best_value, 3) + " after " + std::to_string(r1.evaluations) +
              " evaluations" + (inside ? "" : " (left bounds)") + (deterministic ? ", deterministic" : ", NOT deterministic")};
}

Outcome accelerometer_modes() {
  const ConstantOperators ops = table_operators();
  auto first = [&](AccelMode mode) {
    return natural_modes(with_accel_mode(ops, mode), table_material(), 1).modes[0].frequency_hz();
  };
  const double correct = first(AccelMode::correct), ignore = first(AccelMode::ignore), smear = first(AccelMode::smear);
  const double d_ignore = (ignore - correct) / correct, d_smear = (smear - correct) / correct;
  return {std::abs(d_ignore) > 0.01 && d_smear != 0.0,
          "first peak " + num(correct, 6) + " Hz; ignore " + num(100 * d_ignore, 3) + "%, smear " +
              num(100 * d_smear, 3) + "%"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> criteria = {
      {1, rigidity_formula},   {2, first_frequency_without_accelerometer},
      {3, mesh_convergence},   {4, static_limit_and_realness},
      {5, peak_counts},        {6, derivative_accuracy},
      {7, local_fit},          {8, global_fit},
      {9, optimizer_units},    {10, accelerometer_modes},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [n, run] : criteria) {
    if (!selected.empty() && !selected.count(n)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d %s: %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
