#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "plateid/fit.hpp"
#include "plateid/forward.hpp"
#include "plateid/sensitivity.hpp"

namespace plateid {

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// `freq_hz,re,im,amp,phase_rad`, one row per frequency, 17 significant
/// digits.
void write_afc_csv(const std::filesystem::path& path, const std::vector<double>& freqs_hz,
                   const std::vector<Complex>& values);
inline void write_afc_csv(const std::filesystem::path& path, const FrequencyResponse& response) {
  write_afc_csv(path, response.freqs_hz, response.values);
}

/// Reads the re/im columns of an AFC file; amp and phase are ignored.
ReferenceData read_afc_csv(const std::filesystem::path& path);

/// Sidecar describing how a reference file was produced.
struct DataMetadata {
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::string parametrization;
  std::optional<Eigen::VectorXd> theta_ref;
};

std::filesystem::path metadata_path(const std::filesystem::path& data_path);
void write_metadata(const std::filesystem::path& path, const DataMetadata& meta);
DataMetadata read_metadata(const std::filesystem::path& path);

/// `iter,loss,theta_1..theta_k,delta_or_spread`.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

/// `mode,freq_hz,omega,decay,lambda_re,lambda_im,residual`.
void write_modes_csv(const std::filesystem::path& path, const ModalResult& modes);

/// key = value report of a fit.
void write_fit_report(const std::filesystem::path& path, const FitResult& fit,
                      const std::optional<Eigen::VectorXd>& thresholds, bool passed);

}  // namespace plateid
