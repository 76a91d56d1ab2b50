#pragma once

// EIT medium as a linear, phase-insensitive channel: Lorentzian power window,
// linear-phase group delay, optional excess noise shaped like the window.

#include <complex>
#include <span>
#include <vector>

namespace cvdelay {

class SpectralModel;

struct EITWindow {
  double peak_transmission = 1.0;  // power, at zero sideband frequency
  double fwhm_bandwidth = 1e6;     // Hz, full width at half maximum of |H|^2 - floor
  double group_delay = 0.0;        // s
  double floor_transmission = 1.0; // far-detuned power transmission
  double excess_noise = 0.0;       // QNL units at the window centre

  // Peak = floor = 1, no delay: the off-resonance channel.
  static EITWindow transparent() { return {}; }
  void validate() const;
};

struct ChannelResponse {
  std::complex<double> amplitude;
  double frequency = 0.0;
  double power() const { return std::norm(amplitude); }
};

// Unit-peak Lorentzian 1 / (1 + (2f/fwhm)^2).
double unit_window(const EITWindow& w, double f);
double power_transmission(const EITWindow& w, double f);
ChannelResponse transfer_function(const EITWindow& w, double f);
// Excess noise added at sideband f (QNL units).
double excess_noise_at(const EITWindow& w, double f);

SpectralModel propagate_spectrum(const SpectralModel& v_in, const EITWindow& w);

double delay_response(const EITWindow& w);

struct SweepPoint {
  double bandwidth_hz = 0.0;
  double transmission = 0.0;
};
std::vector<SweepPoint> bandwidth_transmission_sweep(std::span<const EITWindow> windows,
                                                     double f_probe);

}  // namespace cvdelay
