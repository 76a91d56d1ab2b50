#pragma once

// Run configuration: an INI-like text file whose sections mirror the modules.
//
//   [scenario]  name, preset, seed
//   [synth]     sample_rate, duration, antialias_cutoff, visibility_c, visibility_d,
//               passive_loss, split_reflectivity, split_phase
//   [source]    squeezing_db, antisqueezing_db, cavity_rolloff_hz, low_freq_corner_hz,
//               reference (source | detected)
//   [eit]       peak_transmission, fwhm_bandwidth, group_delay, floor_transmission, excess_noise
//   [analysis]  downmix_frequency, cutoff, decimation, theta_points, max_lag,
//               bootstrap_segments, psd_segment, psd_overlap, parity, align_delay, reference_peak
//   [output]    directory
//   [sweep]     variable, values | start+stop+points, probe_frequency, mode (analytic | pipeline)
//
// "preset" seeds every other key from a named bundle; keys in the file override it.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cvdelay/eit.hpp"
#include "cvdelay/spectrum.hpp"
#include "cvdelay/synth.hpp"

namespace cvdelay {

enum class LevelReference { source, detected };

struct AnalysisConfig {
  double downmix_frequency = 50e3;
  double cutoff = 10e3;
  std::size_t decimation = 5;
  std::size_t theta_points = 180;
  double max_lag = 20e-6;
  std::size_t bootstrap_segments = 20;
  std::size_t psd_segment = 1 << 16;
  double psd_overlap = 0.5;
  bool parity = false;
  bool align_delay = true;
  double reference_peak = 0.0;  // 0: g(tau) is normalized to its own peak

  void validate() const;
};

struct SweepConfig {
  std::string variable;  // bandwidth | peak_transmission | group_delay | squeezing_db
  std::vector<double> values;
  double probe_frequency = 50e3;
  std::string mode = "analytic";  // analytic | pipeline

  void validate() const;
};

struct RunConfig {
  std::string scenario = "custom";
  SimulationConfig sim;
  SourceParams source;
  LevelReference level_reference = LevelReference::source;
  EITWindow window = EITWindow::transparent();
  AnalysisConfig analysis;
  std::string output_dir = "out";
  std::optional<SweepConfig> sweep;

  void validate() const;
  // Efficiency used to de-embed "detected" source levels: passive loss times arm-c visibility^2.
  double reference_efficiency() const;
  SpectralModel spectral_model() const;
  // Canonical text that parse_config reads back to an identical RunConfig.
  std::string to_text() const;
};

RunConfig parse_config(const std::string& text, const std::string& source_name = "<config>");
RunConfig load_config(const std::filesystem::path& path);

std::vector<std::string> preset_names();
RunConfig preset(const std::string& name);

}  // namespace cvdelay
