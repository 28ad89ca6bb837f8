#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "plateid/assembly.hpp"
#include "plateid/config.hpp"
#include "plateid/fit.hpp"
#include "plateid/forward.hpp"
#include "plateid/io.hpp"
#include "plateid/mesh.hpp"
#include "plateid/parametrization.hpp"
#include "plateid/sensitivity.hpp"

using namespace plateid;
namespace fs = std::filesystem;

namespace {

enum ExitCode : int { ok = 0, other = 1, config_error = 2, solver_failure = 3, threshold_failure = 4 };

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string accel_mode;
};

RunConfig load(const Overrides& o) {
  RunConfig c = o.config.empty() ? parse_config("") : load_config(o.config);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) {
    c.noise_seed = *o.seed;
    c.global.de.seed = *o.seed;
  }
  if (o.threads) {
    c.threads = *o.threads;
    c.global.threads = *o.threads;
  }
  if (!o.accel_mode.empty()) {
    try {
      c.accel_mode = accel_mode_from_string(o.accel_mode);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  return c;
}

Mesh build_mesh(const RunConfig& c) {
  return c.mesh_path ? load_mesh(*c.mesh_path) : generate_strip_mesh(c.geometry);
}

ConstantOperators build_operators(const RunConfig& c) {
  return with_accel_mode(assemble(build_mesh(c), c.geometry, c.density), c.accel_mode);
}

// Reference data and, when known, the parameters that produced it.
struct Dataset {
  ReferenceData data;
  std::optional<Eigen::VectorXd> theta_ref;
};

Dataset acquire_data(const RunConfig& c, const ConstantOperators& ops, const Parametrization& param) {
  Dataset d;
  if (c.data_path) {
    d.data = read_afc_csv(*c.data_path);
    const fs::path meta = metadata_path(*c.data_path);
    if (fs::exists(meta)) {
      const DataMetadata m = read_metadata(meta);
      d.data.noise_level = m.noise_level;
      d.data.seed = m.seed;
      if (m.theta_ref && m.parametrization == param.name()) d.theta_ref = m.theta_ref;
    }
    return d;
  }
  d.data = synthesize_data(ops, c.reference, c.frequencies(), c.noise_level, c.noise_seed, c.threads);
  d.theta_ref = param.from_material(c.reference);
  return d;
}

void print_vector(const char* label, const Eigen::VectorXd& v) {
  std::printf("%-24s", label);
  for (Eigen::Index i = 0; i < v.size(); ++i) std::printf(" %.9g", v[i]);
  std::printf("\n");
}

bool within(const FitResult& fit, const std::optional<Eigen::VectorXd>& thresholds) {
  if (!thresholds) return true;
  if (fit.relative_errors.size() != thresholds->size()) return false;
  return (fit.relative_errors.array().abs() <= thresholds->array()).all();
}

int report_fit(const RunConfig& c, const FitResult& fit, const std::string& tag) {
  for (const FitStage& s : fit.stages) write_trace_csv(c.output_dir / ("trace_" + s.name + ".csv"), s.trace);
  const bool passed = within(fit, c.thresholds);
  write_fit_report(c.output_dir / ("fit_" + tag + ".txt"), fit, c.thresholds, passed);
  for (const std::string& w : fit.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (fit.global_theta.size()) {
    print_vector("global theta", fit.global_theta);
    if (fit.global_relative_errors.size()) print_vector("global relative error", fit.global_relative_errors);
  }
  print_vector("theta", fit.theta);
  if (fit.relative_errors.size()) print_vector("relative error", fit.relative_errors);
  std::printf("%-24s %.6g\n%-24s %d\n%-24s %s\n%-24s %.1f\n", "loss", fit.loss, "iterations", fit.iterations,
              "termination", fit.termination.c_str(), "seconds", fit.seconds);
  if (c.thresholds) std::printf("%-24s %s\n", "thresholds", passed ? "met" : "NOT met");
  return passed ? ok : threshold_failure;
}

int cmd_mesh(const RunConfig& c) {
  const Mesh mesh = build_mesh(c);
  const fs::path path = c.output_dir / "mesh.txt";
  fs::create_directories(c.output_dir);
  save_mesh(mesh, path);
  std::printf("nodes %zu triangles %zu edges %zu clamped_edges %zu accel_triangles %zu\n", mesh.num_nodes(),
              mesh.num_triangles(), mesh.num_edges(), mesh.clamped_edges.size(), mesh.accel_triangles.size());
  std::printf("wrote %s\n", path.string().c_str());
  return ok;
}

int cmd_forward(const RunConfig& c) {
  const ConstantOperators ops = build_operators(c);
  const FrequencyResponse r = sweep(ops, c.reference, c.frequencies(), c.threads);
  const fs::path path = c.output_dir / "afc.csv";
  write_afc_csv(path, r);
  for (std::size_t k : find_peaks(r))
    std::printf("peak %.3f Hz  |AFC| %.6g\n", r.freqs_hz[k], std::abs(r.values[k]));
  std::printf("wrote %s\n", path.string().c_str());
  return ok;
}

int cmd_modes(const RunConfig& c) {
  const ConstantOperators ops = build_operators(c);
  const ModalResult m = natural_modes(ops, c.reference, c.mode_count);
  const fs::path path = c.output_dir / "modes.csv";
  write_modes_csv(path, m);
  std::printf("%4s %14s %14s %12s\n", "mode", "freq_hz", "decay", "residual");
  for (std::size_t i = 0; i < m.modes.size(); ++i)
    std::printf("%4zu %14.6f %14.6g %12.3e\n", i + 1, m.modes[i].frequency_hz(), m.modes[i].decay,
                m.modes[i].residual);
  std::printf("wrote %s\n", path.string().c_str());
  return ok;
}

int cmd_synth(const RunConfig& c) {
  const ConstantOperators ops = build_operators(c);
  const auto param = make_parametrization(c.parametrization);
  ReferenceData data = synthesize_data(ops, c.reference, c.frequencies(), 0.0, c.noise_seed, c.threads);
  const double sigma = add_noise(data.values, c.noise_level, c.noise_seed);
  const fs::path path = c.output_dir / "data.csv";
  write_afc_csv(path, data.freqs_hz, data.values);
  write_metadata(metadata_path(path), {c.noise_level, c.noise_seed, sigma, param->name(),
                                       param->from_material(c.reference)});
  std::printf("points %zu noise %.3g%% sigma %.6g seed %llu\nwrote %s\n", data.size(), c.noise_level, sigma,
              static_cast<unsigned long long>(c.noise_seed), path.string().c_str());
  return ok;
}

int cmd_fit_local(const RunConfig& c) {
  const ConstantOperators ops = build_operators(c);
  const auto param = make_parametrization(c.parametrization);
  Dataset d = acquire_data(c, ops, *param);
  const LossFunction loss(ops, *param, std::move(d.data), c.threads);
  const Eigen::VectorXd theta0 = c.initial_point(*param);
  print_vector("initial theta", theta0);
  const FitResult fit = fit_local(loss, theta0, c.trust_region, d.theta_ref);
  return report_fit(c, fit, "local");
}

int cmd_fit_global(const RunConfig& c) {
  const ConstantOperators ops = build_operators(c);
  IsotropicParametrization iso;
  Dataset d = acquire_data(c, ops, iso);
  const FitResult fit = fit_global(ops, d.data, c.global, d.theta_ref);
  return report_fit(c, fit, "global");
}

int cmd_check_grad(const RunConfig& c) {
  const ConstantOperators ops = build_operators(c);
  const auto param = make_parametrization(c.parametrization);
  const Eigen::VectorXd theta = c.check_theta ? *c.check_theta : param->from_material(c.reference);
  if (theta.size() != param->dimension())
    throw ConfigError("check.theta needs " + std::to_string(param->dimension()) + " values");
  if (!param->physical(theta)) throw ConfigError("check.theta is outside the physical parameter range");
  // Nonzero residuals so the gradient at the reference point is not trivially zero.
  ReferenceData data =
      synthesize_data(ops, c.reference, c.frequencies(), c.check_noise_level, c.noise_seed, c.threads);
  const LossFunction loss(ops, *param, std::move(data), c.threads);
  const DerivativeCheck r = check_derivatives(loss, theta);
  print_vector("theta", theta);
  print_vector("gradient", r.gradient);
  print_vector("fd gradient", r.fd_gradient);
  std::printf("%-24s %.3e\n%-24s %.3e\n%-24s %.3e\n", "gradient discrepancy", r.gradient_discrepancy,
              "hessian discrepancy", r.hessian_discrepancy, "hessian asymmetry", r.hessian_asymmetry);
  const bool passed = r.gradient_discrepancy <= 1e-5 && r.hessian_discrepancy <= 1e-4 && r.hessian_asymmetry <= 1e-10;
  std::printf("%-24s %s\n", "derivatives", passed ? "consistent" : "INCONSISTENT");
  return passed ? ok : threshold_failure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-response model and material identification for a clamped vibrating strip"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("-c,--config", o.config, "INI configuration file");
  app.add_option("-o,--out", o.out, "Output directory");
  app.add_option("--seed", o.seed, "Noise and global-search seed");
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)");
  app.add_option("--accel-mode", o.accel_mode, "Accelerometer model: correct, ignore, smear");

  using Command = int (*)(const RunConfig&);
  const std::pair<const char*, std::pair<const char*, Command>> commands[] = {
      {"mesh", {"Generate or load the mesh and write it", cmd_mesh}},
      {"forward", {"Compute the AFC on the frequency grid", cmd_forward}},
      {"modes", {"Compute natural frequencies and decay rates", cmd_modes}},
      {"synth", {"Write noisy reference data", cmd_synth}},
      {"fit-local", {"Trust-region identification from an initial guess", cmd_fit_local}},
      {"fit-global", {"Differential evolution followed by local refinement", cmd_fit_global}},
      {"check-grad", {"Compare derivatives with finite differences", cmd_check_grad}},
  };
  Command selected = nullptr;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->callback([&selected, fn = entry.second] { selected = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    const RunConfig config = load(o);
    return selected(config);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return config_error;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return config_error;
  } catch (const MeshError& e) {
    std::fprintf(stderr, "mesh error: %s\n", e.what());
    return config_error;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return solver_failure;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return config_error;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return other;
  }
}
