#include "cvdelay/eit.hpp"

#include <cmath>
#include <numbers>

#include "cvdelay/error.hpp"
#include "cvdelay/spectrum.hpp"

namespace cvdelay {

void EITWindow::validate() const {
  if (!(floor_transmission >= 0.0 && floor_transmission <= peak_transmission &&
        peak_transmission <= 1.0))
    throw InvalidArgument("EIT window needs 0 <= floor_transmission <= peak_transmission <= 1");
  if (!(fwhm_bandwidth > 0.0)) throw InvalidArgument("EIT fwhm_bandwidth must be > 0");
  if (!(group_delay >= 0.0)) throw InvalidArgument("EIT group_delay must be >= 0");
  if (!(excess_noise >= 0.0)) throw InvalidArgument("EIT excess_noise must be >= 0");
}

double unit_window(const EITWindow& w, double f) {
  const double x = 2.0 * f / w.fwhm_bandwidth;
  return 1.0 / (1.0 + x * x);
}

double power_transmission(const EITWindow& w, double f) {
  return w.floor_transmission + (w.peak_transmission - w.floor_transmission) * unit_window(w, f);
}

ChannelResponse transfer_function(const EITWindow& w, double f) {
  const double mag = std::sqrt(power_transmission(w, f));
  const double phase = -2.0 * std::numbers::pi * f * w.group_delay;
  return {std::polar(mag, phase), f};
}

double excess_noise_at(const EITWindow& w, double f) {
  return w.excess_noise * unit_window(w, f);
}

SpectralModel propagate_spectrum(const SpectralModel& v_in, const EITWindow& w) {
  return v_in.through(w);
}

double delay_response(const EITWindow& w) {
  w.validate();
  return w.group_delay;
}

std::vector<SweepPoint> bandwidth_transmission_sweep(std::span<const EITWindow> windows,
                                                     double f_probe) {
  if (windows.empty()) throw InvalidArgument("bandwidth sweep needs at least one window");
  if (!(f_probe > 0.0)) throw InvalidArgument("probe frequency must be > 0");
  std::vector<SweepPoint> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    w.validate();
    out.push_back({w.fwhm_bandwidth, power_transmission(w, f_probe)});
  }
  return out;
}

}  // namespace cvdelay
