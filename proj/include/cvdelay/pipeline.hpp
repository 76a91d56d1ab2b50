#pragma once

// End-to-end runs behind the CLI: simulate records, analyze them, sweep a
// parameter. File writers are atomic per file.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cvdelay/config.hpp"
#include "cvdelay/dsp.hpp"
#include "cvdelay/metrics.hpp"

namespace cvdelay {

inline constexpr int kManifestFormatVersion = 1;

struct RecordSet {
  TimeSeriesRecord c_plus, d_plus, vacuum_plus;
  TimeSeriesRecord c_minus, d_minus, vacuum_minus;
};

// Amplitude run at homodyne angle 0, phase run at pi/2.
RecordSet simulate(const RunConfig& cfg);

struct AnalysisResult {
  metrics::EntanglementReport report;
  std::optional<dsp::DelayEstimate> delay;
  std::optional<gaussian::Quadrature> delay_quadrature;  // record pair the delay came from
  std::optional<std::string> delay_failure;
  dsp::CorrelationCurve g_curve;  // normalized per AnalysisConfig::reference_peak
  dsp::PsdEstimate psd_vacuum_plus, psd_c_plus, psd_d_plus;
  dsp::PsdEstimate psd_vacuum_minus, psd_c_minus, psd_d_minus;
  metrics::ScatterSet scatter_plus, scatter_minus;
};

AnalysisResult analyze(const RecordSet& records, const AnalysisConfig& cfg);

// Writes the six record files, manifest.json and model_covariance.txt into dir.
std::filesystem::path write_simulation(const std::filesystem::path& dir, const RunConfig& cfg,
                                       const RecordSet& records);

struct LoadedRun {
  RecordSet records;
  std::optional<RunConfig> config;  // present when a manifest was found
};
// Accepts a manifest path or a directory holding the standard record names.
// A missing vacuum reference is a CalibrationError.
LoadedRun load_records(const std::filesystem::path& path);

// report.txt, ellipse_{plus,minus,qnl}.csv, g_tau.csv, psd_*.csv, covariance.txt.
void write_analysis(const std::filesystem::path& dir, const AnalysisResult& result);

struct SweepRow {
  double value = 0.0;
  double transmission = 0.0;
  double surviving_squeezing_db = 0.0;
  double duan_i = 0.0;
  double tau_hat = 0.0;
};
std::vector<SweepRow> run_sweep(const RunConfig& cfg);
std::string sweep_csv(const RunConfig& cfg, const std::vector<SweepRow>& rows);

// Analytic band-averaged covariance of a run (the oracle for its analysis).
gaussian::TwoModeCovariance model_covariance(const RunConfig& cfg);

std::string manifest_json(const RunConfig& cfg);
RunConfig config_from_manifest(const std::filesystem::path& manifest);

}  // namespace cvdelay
