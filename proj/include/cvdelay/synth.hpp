#pragma once

// Synthetic homodyne photocurrents. A squeezed beam is split with vacuum, one
// arm passes the EIT channel, both arms suffer passive loss and imperfect
// visibility, and each detector records a quadrature at 5 MHz (by default).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvdelay/eit.hpp"
#include "cvdelay/gaussian.hpp"
#include "cvdelay/spectrum.hpp"

namespace cvdelay {

enum class Channel { c, d, vacuum_ref };
std::string to_string(Channel ch);
Channel parse_channel(const std::string& s);

struct SimulationConfig {
  double sample_rate = 5e6;
  double duration = 0.5;
  double antialias_cutoff = 1.9e6;
  double homodyne_angle_c = 0.0;  // 0 selects X+, pi/2 selects X-
  double homodyne_angle_d = 0.0;
  double visibility_c = 0.97;
  double visibility_d = 0.99;
  double passive_loss = 0.15;
  double split_reflectivity = 0.5;
  double split_phase = 0.0;
  std::uint64_t rng_seed = 1;

  void validate() const;
  std::size_t sample_count() const;
  gaussian::Quadrature quadrature() const;  // label of detector c
};

gaussian::Quadrature quadrature_of_angle(double angle);

struct TimeSeriesRecord {
  std::vector<double> samples;
  double sample_rate = 0.0;
  gaussian::Quadrature quadrature = gaussian::Quadrature::plus;
  Channel channel = Channel::c;
  std::uint64_t seed = 0;
  // Factor applied to raw samples so far; 1 for uncalibrated data.
  double qnl_scale = 1.0;

  double duration() const;
  void validate() const;
};

struct RecordPair {
  TimeSeriesRecord c;
  TimeSeriesRecord d;
};

RecordPair synthesize_pair(const SimulationConfig& cfg, const SpectralModel& source,
                           const EITWindow& window);
TimeSeriesRecord vacuum_reference(const SimulationConfig& cfg);

// Full 4x4 state seen by the two detectors at sideband f (no delay phase).
gaussian::TwoModeCovariance detected_covariance(const SimulationConfig& cfg,
                                                const SpectralModel& source,
                                                const EITWindow& window, double f);

// Detected covariance averaged over the analysis band [f0 - cutoff, f0 + cutoff]
// with the down-mix filter's power response as weight.
gaussian::TwoModeCovariance band_covariance(const SimulationConfig& cfg,
                                            const SpectralModel& source,
                                            const EITWindow& window, double f0, double cutoff);

// One-sided PSD of the synthesized vacuum record at each frequency, in
// (QNL variance)/Hz. Multiply by V(f) for a squeezed channel.
std::vector<double> vacuum_density(const SimulationConfig& cfg, std::span<const double> freqs);

// Counter-based standard normal keyed by (seed, stream, counter).
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

}  // namespace cvdelay
