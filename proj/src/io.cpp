#include "plateid/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace plateid {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(", "), boost::token_compress_on);
  std::vector<double> values;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) values.push_back(std::stod(p));
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

void write_afc_csv(const std::filesystem::path& path, const std::vector<double>& freqs_hz,
                   const std::vector<Complex>& values) {
  if (freqs_hz.size() != values.size()) throw std::invalid_argument("AFC: frequency/value count mismatch");
  std::ofstream out = open_out(path);
  out << "freq_hz,re,im,amp,phase_rad\n";
  for (std::size_t k = 0; k < values.size(); ++k)
    out << fmt(freqs_hz[k]) << ',' << fmt(values[k].real()) << ',' << fmt(values[k].imag()) << ','
        << fmt(std::abs(values[k])) << ',' << fmt(std::arg(values[k])) << '\n';
  if (!out) throw FormatError("failed writing " + path.string());
}

ReferenceData read_afc_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  boost::trim(line);
  std::vector<std::string> header;
  boost::split(header, line, boost::is_any_of(","));
  int col_f = -1, col_re = -1, col_im = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = boost::trim_copy(header[i]);
    if (name == "freq_hz") col_f = static_cast<int>(i);
    if (name == "re") col_re = static_cast<int>(i);
    if (name == "im") col_im = static_cast<int>(i);
  }
  if (col_f < 0 || col_re < 0 || col_im < 0)
    throw FormatError(path.string() + ": header must contain freq_hz, re and im");

  ReferenceData data;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    boost::trim(line);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    boost::split(cells, line, boost::is_any_of(","));
    if (cells.size() != header.size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " columns");
    try {
      data.freqs_hz.push_back(std::stod(cells[static_cast<std::size_t>(col_f)]));
      data.values.emplace_back(std::stod(cells[static_cast<std::size_t>(col_re)]),
                               std::stod(cells[static_cast<std::size_t>(col_im)]));
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return data;
}

std::filesystem::path metadata_path(const std::filesystem::path& data_path) {
  return std::filesystem::path(data_path.string() + ".meta");
}

void write_metadata(const std::filesystem::path& path, const DataMetadata& meta) {
  std::ofstream out = open_out(path);
  out << "[data]\n";
  out << "noise_level = " << fmt(meta.noise_level) << '\n';
  out << "seed = " << meta.seed << '\n';
  out << "noise_sigma = " << fmt(meta.noise_sigma) << '\n';
  if (!meta.parametrization.empty()) out << "parametrization = " << meta.parametrization << '\n';
  if (meta.theta_ref) out << "theta_ref = " << join(*meta.theta_ref) << '\n';
}

DataMetadata read_metadata(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw FormatError(e.what());
  }
  DataMetadata meta;
  try {
    meta.noise_level = tree.get<double>("data.noise_level", 0.0);
    meta.seed = tree.get<std::uint64_t>("data.seed", 0);
    meta.noise_sigma = tree.get<double>("data.noise_sigma", 0.0);
    meta.parametrization = tree.get<std::string>("data.parametrization", "");
    if (auto t = tree.get_optional<std::string>("data.theta_ref")) meta.theta_ref = parse_vector(*t);
  } catch (const std::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return meta;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
  std::ofstream out = open_out(path);
  const Eigen::Index k = trace.empty() ? 0 : trace.front().theta.size();
  out << "iter,loss";
  for (Eigen::Index j = 1; j <= k; ++j) out << ",theta_" << j;
  out << ",delta_or_spread\n";
  for (const TraceRow& row : trace) {
    out << row.iteration << ',' << fmt(row.loss);
    for (Eigen::Index j = 0; j < row.theta.size(); ++j) out << ',' << fmt(row.theta[j]);
    out << ',' << fmt(row.delta_or_spread) << '\n';
  }
}

void write_modes_csv(const std::filesystem::path& path, const ModalResult& modes) {
  std::ofstream out = open_out(path);
  out << "mode,freq_hz,omega,decay,lambda_re,lambda_im,residual\n";
  for (std::size_t i = 0; i < modes.modes.size(); ++i) {
    const Mode& m = modes.modes[i];
    out << i + 1 << ',' << fmt(m.frequency_hz()) << ',' << fmt(m.omega) << ',' << fmt(m.decay) << ','
        << fmt(m.eigenvalue.real()) << ',' << fmt(m.eigenvalue.imag()) << ',' << fmt(m.residual) << '\n';
  }
}

void write_fit_report(const std::filesystem::path& path, const FitResult& fit,
                      const std::optional<Eigen::VectorXd>& thresholds, bool passed) {
  std::ofstream out = open_out(path);
  out << "[fit]\n";
  out << "labels = " << boost::join(fit.labels, ", ") << '\n';
  out << "theta = " << join(fit.theta) << '\n';
  out << "loss = " << fmt(fit.loss) << '\n';
  if (fit.relative_errors.size()) out << "relative_errors = " << join(fit.relative_errors) << '\n';
  if (fit.global_theta.size()) {
    out << "global_theta = " << join(fit.global_theta) << '\n';
    out << "global_loss = " << fmt(fit.global_loss) << '\n';
    out << "best_restart = " << fit.best_restart << '\n';
    if (fit.global_relative_errors.size())
      out << "global_relative_errors = " << join(fit.global_relative_errors) << '\n';
  }
  out << "iterations = " << fit.iterations << '\n';
  out << "value_evaluations = " << fit.value_evaluations << '\n';
  out << "gradient_evaluations = " << fit.gradient_evaluations << '\n';
  out << "hessian_evaluations = " << fit.hessian_evaluations << '\n';
  out << "termination = " << fit.termination << '\n';
  out << "seconds = " << fmt(fit.seconds) << '\n';
  if (thresholds) out << "thresholds = " << join(*thresholds) << '\n';
  out << "passed = " << (passed ? "true" : "false") << '\n';
  for (std::size_t i = 0; i < fit.warnings.size(); ++i) out << "warning_" << i + 1 << " = " << fit.warnings[i] << '\n';
}

}  // namespace plateid
