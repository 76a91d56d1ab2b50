#pragma once

// Signal chain applied to homodyne records: QNL calibration, digital
// down-conversion, Welch spectra and cross-correlation delay estimation.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cvdelay/fir.hpp"
#include "cvdelay/synth.hpp"

namespace cvdelay::dsp {

struct BasebandRecord {
  std::vector<double> in_phase;
  std::vector<double> quadrature_part;  // may be empty
  double sample_rate = 0.0;
  double center_frequency = 0.0;
  double bandwidth = 0.0;
  double start_time = 0.0;  // time of sample 0 on the source record's clock
  gaussian::Quadrature quadrature = gaussian::Quadrature::plus;
  Channel channel = Channel::c;
  double qnl_scale = 1.0;

  std::span<const double> samples() const { return in_phase; }
  std::size_t size() const { return in_phase.size(); }
  double duration() const;
  void validate() const;
};

TimeSeriesRecord normalize_to_qnl(const TimeSeriesRecord& rec, const TimeSeriesRecord& vacuum_ref);
BasebandRecord normalize_to_qnl(const BasebandRecord& rec, const BasebandRecord& vacuum_ref);

BasebandRecord downmix(const TimeSeriesRecord& rec, double f0, double cutoff,
                       std::size_t decimation);

struct PsdEstimate {
  std::vector<double> frequency;
  std::vector<double> power;  // one-sided density, variance per Hz
  double resolution = 0.0;
  std::size_t segments = 0;
};

PsdEstimate estimate_psd(const TimeSeriesRecord& rec, std::size_t segment_length = 1 << 16,
                         double overlap = 0.5);
// Per-bin 10 log10(P / P_vacuum).
std::vector<double> to_qnl_db(const PsdEstimate& psd, const PsdEstimate& vacuum);
double integrate_psd(const PsdEstimate& psd, double f_lo, double f_hi);

struct CorrelationCurve {
  std::vector<double> lags;  // s
  std::vector<double> g;

  // Rescaled so that reference_peak maps to 1 (sign preserved).
  CorrelationCurve normalized_to(double reference_peak) const;
};

struct DelayEstimate {
  double tau_hat = 0.0;      // s; positive when y lags x
  double peak = 0.0;         // signed correlation at the refined peak
  double threshold = 0.0;    // significance level the peak had to clear
  CorrelationCurve curve;
};

// g(tau) = Re<z_y(t) conj(z_x(t - tau))> e^{i w0 tau} / sqrt(<|z_x|^2><|z_y|^2>), the
// passband-equivalent normalized correlation; the real correlation when no
// quadrature component is present.
DelayEstimate estimate_delay(const BasebandRecord& x, const BasebandRecord& y, double max_lag);

// Advances y by tau (fractional, with the carrier phase e^{i w0 tau}) and trims
// both records to their common support.
std::pair<BasebandRecord, BasebandRecord> align(const BasebandRecord& x, const BasebandRecord& y,
                                                double tau);

}  // namespace cvdelay::dsp
